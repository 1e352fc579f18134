#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace biadapt {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

/// lr = 1e-4 and weight_decay = 0.1; betas and eps are the usual Adam defaults.
AdamWConfig default_config() noexcept;

struct AdamWState {
    AdamWConfig config;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamWState() = default;
    AdamWState(AdamWConfig cfg, std::size_t parameter_count)
        : config(cfg), m(parameter_count, 0.0), v(parameter_count, 0.0) {}
};

/// One decoupled-weight-decay Adam update, in place.
///
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * (theta - anchor))
///
/// With no decay anchor the decay is applied as theta * (1 - lr * wd), so a
/// zero gradient shrinks parameters by exactly that factor. A non-empty
/// decay_anchor (same length as params) decays toward it instead.
/// Throws NonFiniteGradient before touching any state.
void adamw_step(AdamWState& state, std::span<double> params, std::span<const double> grad,
                std::span<const double> decay_anchor = {});

} // namespace biadapt
