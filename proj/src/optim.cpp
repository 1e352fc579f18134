#include "biadapt/optim.hpp"

#include "biadapt/error.hpp"

#include <cmath>
#include <string>

namespace biadapt {

AdamWConfig default_config() noexcept { return AdamWConfig{}; }

void adamw_step(AdamWState& state, std::span<double> params, std::span<const double> grad,
                std::span<const double> decay_anchor) {
    const std::size_t n = params.size();
    if (grad.size() != n || (!decay_anchor.empty() && decay_anchor.size() != n)) {
        throw Error(ErrorKind::DimMismatch, "adamw_step: parameter/gradient length mismatch");
    }
    if (state.m.size() != n || state.v.size() != n) {
        throw Error(ErrorKind::DimMismatch, "adamw_step: optimizer state has " +
                                                std::to_string(state.m.size()) + " slots for " +
                                                std::to_string(n) + " parameters");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(grad[i])) {
            throw Error(ErrorKind::NonFiniteGradient, "gradient entry " + std::to_string(i));
        }
    }

    const AdamWConfig& cfg = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const double shrink = 1.0 - cfg.lr * cfg.weight_decay;

    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        const double update = cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps));
        if (decay_anchor.empty()) {
            params[i] = params[i] * shrink - update;
        } else {
            params[i] = params[i] - cfg.lr * cfg.weight_decay * (params[i] - decay_anchor[i]) - update;
        }
    }
}

} // namespace biadapt
