#pragma once

#include "biadapt/adapter.hpp"
#include "biadapt/embedding_store.hpp"
#include "biadapt/optim.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biadapt {

enum class Structure { UpperTri, Dense };
enum class Init { Identity, Random };

std::string_view structure_name(Structure s) noexcept;
std::string_view init_name(Init i) noexcept;
Structure parse_structure(std::string_view name);
Init parse_init(std::string_view name);

/// Exactly `shots` distinct training rows per class.
struct FewShotSplit {
    std::size_t shots = 0;
    std::vector<std::vector<std::size_t>> selected; // selected[class] = row indices
    std::uint64_t seed = 0;

    std::size_t total() const noexcept { return shots * selected.size(); }
};

struct Batch {
    std::vector<std::size_t> images;    // rows of the training set
    std::vector<std::uint32_t> classes; // class of each image
};

struct TrainConfig {
    Mode mode = Mode::Clip;
    std::size_t shots = 16;
    std::size_t epochs = 50;
    std::size_t max_batch_classes = 256;
    std::uint64_t seed = 0;
    Structure structure = Structure::UpperTri;
    Init init = Init::Identity;
    AdamWConfig optimizer = default_config();
    // false: diagonal entries decay toward 1 instead of 0.
    bool decay_diagonal = true;
    float logit_scale = 100.0f; // frozen e^s
    float bias = 0.0f;          // frozen b, ignored in clip mode

    /// Epochs are limited to 0..10000 (0 returns the initial W).
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0; // split loss under a fixed partition, after the epoch's updates
    double elapsed_ms = 0.0;
    double train_acc = 0.0;
    std::optional<double> eval_acc;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;

    /// One JSON object per line: {epoch, loss, elapsed_ms, train_acc, eval_acc?}.
    std::string to_jsonl() const;
};

FewShotSplit build_split(const EmbeddingSet& train_set, std::size_t shots, std::uint64_t seed);

/// Class-distinct batches: each round takes one sample per class, and the
/// round's classes are cut into near-equal chunks of at most
/// max_batch_classes. Every split pair appears exactly once per epoch.
std::vector<Batch> build_batches(const FewShotSplit& split, std::size_t max_batch_classes,
                                 std::uint64_t epoch_seed);

/// Plain chunks of the shuffled split (sigmoid loss tolerates repeated classes).
std::vector<Batch> build_chunks(const FewShotSplit& split, std::size_t batch_size, std::uint64_t epoch_seed);

struct TrainResult {
    BilinearAdapter adapter;
    TrainingLog log;
};

struct DenseTrainResult {
    DenseAdapter adapter;
    TrainingLog log;
};

/// Trains the upper-triangular adapter. If eval_set is given, each epoch
/// record carries its test accuracy.
TrainResult train(const EmbeddingSet& train_set, const PromptSet& prompts, const TrainConfig& config,
                  const EmbeddingSet* eval_set = nullptr);

/// Dense-W training, for the init x structure ablation only.
DenseTrainResult train_dense(const EmbeddingSet& train_set, const PromptSet& prompts, const TrainConfig& config,
                             const EmbeddingSet* eval_set = nullptr);

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels);

template <typename Adapter>
double evaluate(const Adapter& adapter, const EmbeddingSet& test_set, const PromptSet& prompts) {
    require_compatible(test_set, prompts);
    return accuracy(predict(adapter, test_set.features, prompts.features), test_set.labels);
}

struct AblationCell {
    Init init;
    Structure structure;
    double accuracy = 0.0;
};

/// Runs the 2 x 2 grid {identity, random} x {upper_tri, dense} with the
/// shared base config, evaluating each cell on test_set.
std::vector<AblationCell> run_ablation(const EmbeddingSet& train_set, const EmbeddingSet& test_set,
                                       const PromptSet& prompts, const TrainConfig& base);

} // namespace biadapt
