#include "biadapt/trainer.hpp"

#include "biadapt/error.hpp"
#include "biadapt/losses.hpp"
#include "biadapt/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace biadapt {

std::string_view structure_name(Structure s) noexcept {
    return s == Structure::UpperTri ? "upper-tri" : "dense";
}

std::string_view init_name(Init i) noexcept { return i == Init::Identity ? "identity" : "random"; }

Structure parse_structure(std::string_view name) {
    if (name == "upper-tri" || name == "upper_tri") return Structure::UpperTri;
    if (name == "dense") return Structure::Dense;
    throw Error(ErrorKind::InvalidConfig, "unknown structure '" + std::string(name) + "'");
}

Init parse_init(std::string_view name) {
    if (name == "identity") return Init::Identity;
    if (name == "random") return Init::Random;
    throw Error(ErrorKind::InvalidConfig, "unknown init '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (epochs > 10000) throw Error(ErrorKind::InvalidConfig, "epochs must be in 0..10000");
    if (shots == 0) throw Error(ErrorKind::InvalidConfig, "shots must be positive");
    if (max_batch_classes == 0) throw Error(ErrorKind::InvalidConfig, "max_batch_classes must be positive");
    if (!(optimizer.lr > 0.0) || optimizer.weight_decay < 0.0) {
        throw Error(ErrorKind::InvalidConfig, "lr must be positive and weight_decay nonnegative");
    }
    if (!(optimizer.beta1 > 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 > 0.0 && optimizer.beta2 < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "betas must lie in (0, 1)");
    }
    if (!(logit_scale > 0.0f)) throw Error(ErrorKind::InvalidConfig, "logit_scale must be positive");
}

std::string TrainingLog::to_jsonl() const {
    std::ostringstream out;
    for (const auto& r : epochs) {
        nlohmann::json j{{"epoch", r.epoch}, {"loss", r.loss}, {"elapsed_ms", r.elapsed_ms}, {"train_acc", r.train_acc}};
        if (r.eval_acc) j["eval_acc"] = *r.eval_acc;
        out << j.dump() << '\n';
    }
    return out.str();
}

FewShotSplit build_split(const EmbeddingSet& train_set, std::size_t shots, std::uint64_t seed) {
    if (shots == 0) throw Error(ErrorKind::InvalidConfig, "shots must be positive");
    std::vector<std::vector<std::size_t>> by_class(train_set.num_classes);
    for (std::size_t r = 0; r < train_set.n(); ++r) by_class[train_set.labels[r]].push_back(r);

    FewShotSplit split{shots, {}, seed};
    split.selected.resize(by_class.size());
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < shots) {
            throw Error(ErrorKind::InsufficientSamples, "class " + std::to_string(c) + " has " +
                                                            std::to_string(by_class[c].size()) +
                                                            " samples, need " + std::to_string(shots));
        }
        Rng rng = make_rng(seed, "split", c);
        std::vector<std::size_t>& pool = by_class[c];
        std::shuffle(pool.begin(), pool.end(), rng);
        split.selected[c].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(shots));
    }
    return split;
}

std::vector<Batch> build_batches(const FewShotSplit& split, std::size_t max_batch_classes,
                                 std::uint64_t epoch_seed) {
    if (max_batch_classes == 0) throw Error(ErrorKind::InvalidConfig, "max_batch_classes must be positive");
    const std::size_t k = split.selected.size();
    Rng rng = make_rng(epoch_seed, "batches");

    std::vector<std::vector<std::size_t>> order = split.selected;
    for (auto& o : order) std::shuffle(o.begin(), o.end(), rng);

    const std::size_t chunks = (k + max_batch_classes - 1) / max_batch_classes;
    std::vector<Batch> batches;
    std::vector<std::uint32_t> classes(k);
    for (std::size_t round = 0; round < split.shots; ++round) {
        std::iota(classes.begin(), classes.end(), 0u);
        std::shuffle(classes.begin(), classes.end(), rng);
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t begin = c * k / chunks;
            const std::size_t end = (c + 1) * k / chunks;
            Batch b;
            for (std::size_t i = begin; i < end; ++i) {
                b.classes.push_back(classes[i]);
                b.images.push_back(order[classes[i]][round]);
            }
            batches.push_back(std::move(b));
        }
    }
    return batches;
}

std::vector<Batch> build_chunks(const FewShotSplit& split, std::size_t batch_size, std::uint64_t epoch_seed) {
    if (batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch size must be positive");
    std::vector<std::pair<std::size_t, std::uint32_t>> pairs;
    for (std::size_t c = 0; c < split.selected.size(); ++c) {
        for (const auto r : split.selected[c]) pairs.emplace_back(r, static_cast<std::uint32_t>(c));
    }
    Rng rng = make_rng(epoch_seed, "chunks");
    std::shuffle(pairs.begin(), pairs.end(), rng);

    std::vector<Batch> batches;
    for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size) {
        Batch b;
        for (std::size_t i = begin; i < std::min(pairs.size(), begin + batch_size); ++i) {
            b.images.push_back(pairs[i].first);
            b.classes.push_back(pairs[i].second);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels) {
    if (predicted.size() != labels.size()) throw Error(ErrorKind::DimMismatch, "prediction/label count mismatch");
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

// Parameterizations share the epoch loop. Each keeps double master
// parameters for the optimizer and a float copy inside the model used for
// scoring, refreshed after every step.

struct UpperTriParams {
    BilinearAdapter model;
    std::vector<double> master;

    std::vector<double> identity_anchor() const {
        std::vector<double> a(master.size(), 0.0);
        for (std::size_t i = 0; i < model.dim(); ++i) a[model.w.index(i, i)] = 1.0;
        return a;
    }
    void sync() {
        for (std::size_t i = 0; i < master.size(); ++i) model.w.data()[i] = static_cast<float>(master[i]);
    }
    LossValueAndGrad loss(const Matrix& images, const Matrix& prompts_for_batch, std::span<const std::uint32_t> classes,
                          const Matrix& all_prompts) const {
        if (model.mode == Mode::Clip) return biclip_loss(model, images, prompts_for_batch, classes);
        return bisiglip_loss(model, images, classes, all_prompts);
    }
};

struct DenseParams {
    DenseAdapter model;
    std::vector<double> master;

    std::vector<double> identity_anchor() const {
        std::vector<double> a(master.size(), 0.0);
        const std::size_t d = model.dim();
        for (std::size_t i = 0; i < d; ++i) a[i * d + i] = 1.0;
        return a;
    }
    void sync() {
        for (std::size_t i = 0; i < master.size(); ++i) model.w.data()[i] = static_cast<float>(master[i]);
    }
    LossValueAndGrad loss(const Matrix& images, const Matrix& prompts_for_batch, std::span<const std::uint32_t> classes,
                          const Matrix& all_prompts) const {
        if (model.mode == Mode::Clip) {
            require_distinct_classes(classes);
            const LogitLoss l = symmetric_cross_entropy(score(model, images, prompts_for_batch));
            return {l.value, dense_weight_gradient(images, l.dlogits, prompts_for_batch, model.logit_scale).data()};
        }
        const LogitLoss l = pairwise_sigmoid(score(model, images, all_prompts), classes);
        return {l.value, dense_weight_gradient(images, l.dlogits, all_prompts, model.logit_scale).data()};
    }
};

std::vector<double> initial_params(std::size_t count, std::size_t d, const TrainConfig& config,
                                   const std::vector<double>& identity) {
    if (config.init == Init::Identity) return identity;
    Rng rng = make_rng(config.seed, "init");
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> p(count);
    for (double& v : p) v = gauss(rng);
    return p;
}

template <typename Params>
TrainingLog run_epochs(Params& params, const EmbeddingSet& train_set, const PromptSet& prompts,
                       const TrainConfig& config, const EmbeddingSet* eval_set) {
    const FewShotSplit split = build_split(train_set, config.shots, substream_seed(config.seed, "split"));

    std::vector<std::size_t> split_rows;
    std::vector<std::uint32_t> split_labels;
    for (std::size_t c = 0; c < split.selected.size(); ++c) {
        for (const auto r : split.selected[c]) {
            split_rows.push_back(r);
            split_labels.push_back(static_cast<std::uint32_t>(c));
        }
    }
    const Matrix split_features = gather_rows(train_set.features, split_rows);

    const std::vector<double> anchor = config.decay_diagonal ? std::vector<double>{} : params.identity_anchor();
    AdamWState opt(config.optimizer, params.master.size());

    const auto make_batches = [&](std::size_t epoch) {
        const std::uint64_t epoch_seed = substream_seed(config.seed, "epoch", epoch);
        return config.mode == Mode::Clip ? build_batches(split, config.max_batch_classes, epoch_seed)
                                         : build_chunks(split, config.max_batch_classes, epoch_seed);
    };
    const auto batch_loss = [&](const Batch& b) {
        const Matrix images = gather_rows(train_set.features, b.images);
        std::vector<std::size_t> prompt_rows(b.classes.begin(), b.classes.end());
        const Matrix batch_prompts = gather_rows(prompts.features, prompt_rows);
        return params.loss(images, batch_prompts, b.classes, prompts.features);
    };

    TrainingLog log;
    const auto start = std::chrono::steady_clock::now();
    const auto record = [&](std::size_t epoch, double loss) {
        EpochRecord r;
        r.epoch = epoch;
        r.loss = loss;
        r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        r.train_acc = accuracy(predict(params.model, split_features, prompts.features), split_labels);
        if (eval_set) r.eval_acc = evaluate(params.model, *eval_set, prompts);
        log.epochs.push_back(r);
    };

    // The logged loss is the whole split under the epoch-0 partition,
    // measured after the epoch's updates, so it depends on W alone.
    const auto eval_batches = make_batches(0);
    const auto split_loss = [&] {
        double total = 0.0;
        for (const auto& b : eval_batches) total += batch_loss(b).value;
        return total / static_cast<double>(eval_batches.size());
    };

    record(0, split_loss());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (const auto& b : make_batches(epoch)) {
            const LossValueAndGrad lg = batch_loss(b);
            adamw_step(opt, params.master, lg.grad, anchor);
            params.sync();
        }
        record(epoch, split_loss());
    }
    return log;
}

void check_inputs(const EmbeddingSet& train_set, const PromptSet& prompts, const TrainConfig& config,
                  const EmbeddingSet* eval_set) {
    config.validate();
    require_compatible(train_set, prompts);
    if (eval_set) require_compatible(*eval_set, prompts);
}

} // namespace

TrainResult train(const EmbeddingSet& train_set, const PromptSet& prompts, const TrainConfig& config,
                  const EmbeddingSet* eval_set) {
    check_inputs(train_set, prompts, config, eval_set);
    if (config.structure != Structure::UpperTri) {
        throw Error(ErrorKind::InvalidConfig, "train() fits upper-triangular W; use train_dense for the ablation");
    }
    const std::size_t d = train_set.d();
    UpperTriParams params{BilinearAdapter::zero_shot(d, config.logit_scale, config.bias, config.mode), {}};
    std::vector<double> identity(params.model.w.data().begin(), params.model.w.data().end());
    params.master = initial_params(identity.size(), d, config, identity);
    params.sync();
    TrainingLog log = run_epochs(params, train_set, prompts, config, eval_set);
    return {std::move(params.model), std::move(log)};
}

DenseTrainResult train_dense(const EmbeddingSet& train_set, const PromptSet& prompts, const TrainConfig& config,
                             const EmbeddingSet* eval_set) {
    check_inputs(train_set, prompts, config, eval_set);
    const std::size_t d = train_set.d();
    DenseParams params{DenseAdapter{Matrix(d, d), config.logit_scale,
                                    config.mode == Mode::Clip ? 0.0f : config.bias, config.mode},
                       {}};
    params.model.validate();
    std::vector<double> identity(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) identity[i * d + i] = 1.0;
    params.master = initial_params(identity.size(), d, config, identity);
    params.sync();
    TrainingLog log = run_epochs(params, train_set, prompts, config, eval_set);
    return {std::move(params.model), std::move(log)};
}

std::vector<AblationCell> run_ablation(const EmbeddingSet& train_set, const EmbeddingSet& test_set,
                                       const PromptSet& prompts, const TrainConfig& base) {
    std::vector<AblationCell> cells;
    for (const Init init : {Init::Identity, Init::Random}) {
        for (const Structure structure : {Structure::UpperTri, Structure::Dense}) {
            TrainConfig cfg = base;
            cfg.init = init;
            cfg.structure = structure;
            double acc = 0.0;
            if (structure == Structure::UpperTri) {
                acc = evaluate(train(train_set, prompts, cfg).adapter, test_set, prompts);
            } else {
                acc = evaluate(train_dense(train_set, prompts, cfg).adapter, test_set, prompts);
            }
            cells.push_back({init, structure, acc});
        }
    }
    return cells;
}

} // namespace biadapt
