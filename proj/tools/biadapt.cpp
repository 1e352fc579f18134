// biadapt: train and analyze upper-triangular bilinear adapters on
// precomputed vision-language embeddings.
//
//   biadapt synth   --d 64 --k 8 --transform planted-upper-tri --seed 7 --out data/
//   biadapt train   --train data/train.vlme --prompts data/prompts.vlme --out run/
//   biadapt eval    --checkpoint run/adapter.biwt --test data/test.vlme --prompts data/prompts.vlme
//   biadapt analyze --checkpoint run/adapter.biwt --test data/test.vlme --prompts data/prompts.vlme --out an/
//
// Exit codes: 0 success, 1 data/validation error, 2 usage error.

#include "manifest.hpp"

#include "biadapt/embedding_store.hpp"
#include "biadapt/error.hpp"
#include "biadapt/geometry_analysis.hpp"
#include "biadapt/rng.hpp"
#include "biadapt/synth.hpp"
#include "biadapt/trainer.hpp"
#include "biadapt/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace biadapt::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << text;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

struct SynthArgs {
    std::size_t d = 64;
    std::size_t k = 8;
    std::size_t shots_available = 32;
    std::size_t test_per_class = 64;
    double noise = 0.05;
    std::string transform = "planted-upper-tri";
    std::uint64_t seed = 0;
    float logit_scale = 100.0f;
    float bias = 0.0f;
    std::string out;
};

struct TrainArgs {
    std::string train, prompts, test, out;
    std::string mode = "clip";
    std::size_t shots = 16;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    std::string structure = "upper-tri";
    std::string init = "identity";
    double lr = 1e-4;
    double weight_decay = 0.1;
    bool decay_diagonal = true;
    std::size_t max_batch_classes = 256;
};

struct EvalArgs {
    std::string checkpoint, test, prompts, out;
};

struct AnalyzeArgs {
    std::string checkpoint, test, prompts, out;
    bool zero_shot = false;
    std::size_t negatives = 5;
    std::uint64_t seed = 0;
    std::size_t grid_points = 1001;
};

int run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
    SynthSpec spec;
    spec.d = a.d;
    spec.k = a.k;
    spec.train_per_class = a.shots_available;
    spec.test_per_class = a.test_per_class;
    spec.noise_sigma = a.noise;
    spec.transform = parse_transform(a.transform);
    spec.seed = a.seed;
    spec.logit_scale = a.logit_scale;
    spec.bias = a.bias;
    const SynthData data = generate(spec);

    const fs::path out(a.out);
    ensure_dir(out);
    write_embedding_set(data.train, data.train_meta, out / "train.vlme");
    write_embedding_set(data.test, data.test_meta, out / "test.vlme");
    write_prompt_set(data.prompts, data.prompts_meta, out / "prompts.vlme");

    RunManifest m("synth", argv);
    m.set_config({{"d", a.d}, {"k", a.k}, {"shots_available", a.shots_available},
                  {"test_per_class", a.test_per_class}, {"noise_sigma", a.noise},
                  {"transform", transform_name(spec.transform)}, {"logit_scale", a.logit_scale}, {"bias", a.bias}});
    m.add_seed("seed", a.seed);
    for (const char* name : {"train.vlme", "test.vlme", "prompts.vlme"}) {
        m.add_output(out / name);
        m.add_output(sidecar_path(out / name));
    }
    m.write(out);
    return 0;
}

int run_train(const TrainArgs& a, const std::vector<std::string>& argv) {
    const LoadedEmbeddings train_data = read_embedding_set(a.train);
    const LoadedPrompts prompts = read_prompt_set(a.prompts);
    std::optional<LoadedEmbeddings> test_data;
    if (!a.test.empty()) test_data = read_embedding_set(a.test);

    TrainConfig cfg;
    cfg.mode = parse_mode(a.mode);
    cfg.shots = a.shots;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.structure = parse_structure(a.structure);
    cfg.init = parse_init(a.init);
    cfg.optimizer.lr = a.lr;
    cfg.optimizer.weight_decay = a.weight_decay;
    cfg.decay_diagonal = a.decay_diagonal;
    cfg.max_batch_classes = a.max_batch_classes;
    cfg.logit_scale = prompts.meta.logit_scale;
    cfg.bias = cfg.mode == Mode::Clip ? 0.0f : prompts.meta.bias;

    const fs::path out(a.out);
    ensure_dir(out);
    const EmbeddingSet* eval_set = test_data ? &test_data->set : nullptr;

    fs::path checkpoint;
    TrainingLog log;
    if (cfg.structure == Structure::UpperTri) {
        TrainResult r = train(train_data.set, prompts.prompts, cfg, eval_set);
        checkpoint = out / "adapter.biwt";
        write_checkpoint(r.adapter, checkpoint);
        log = std::move(r.log);
    } else {
        DenseTrainResult r = train_dense(train_data.set, prompts.prompts, cfg, eval_set);
        checkpoint = out / "adapter.biwd";
        write_dense_checkpoint(r.adapter, checkpoint);
        log = std::move(r.log);
    }
    write_text(out / "train_log.jsonl", log.to_jsonl());

    RunManifest m("train", argv);
    m.set_config({{"mode", mode_name(cfg.mode)},
                  {"shots", cfg.shots},
                  {"epochs", cfg.epochs},
                  {"structure", structure_name(cfg.structure)},
                  {"init", init_name(cfg.init)},
                  {"max_batch_classes", cfg.max_batch_classes},
                  {"decay_diagonal", cfg.decay_diagonal},
                  {"logit_scale", cfg.logit_scale},
                  {"bias", cfg.bias},
                  {"optimizer",
                   {{"name", "adamw"},
                    {"lr", cfg.optimizer.lr},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps", cfg.optimizer.eps},
                    {"weight_decay", cfg.optimizer.weight_decay}}}});
    m.add_seed("seed", cfg.seed);
    m.add_seed("split", substream_seed(cfg.seed, "split"));
    m.add_input(a.train);
    m.add_input(a.prompts);
    if (!a.test.empty()) m.add_input(a.test);
    m.add_output(checkpoint);
    m.add_output(out / "train_log.jsonl");
    m.write(out);

    const EpochRecord& last = log.epochs.back();
    std::cout << "trained " << structure_name(cfg.structure) << " W (d=" << train_data.set.d() << ") for "
              << cfg.epochs << " epochs; final loss " << last.loss;
    if (last.eval_acc) std::cout << ", test accuracy " << *last.eval_acc;
    std::cout << '\n';
    return 0;
}

int run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
    const LoadedEmbeddings test = read_embedding_set(a.test);
    const LoadedPrompts prompts = read_prompt_set(a.prompts);

    double zero_shot = 0.0, adapted = 0.0;
    json extra;
    if (peek_magic(a.checkpoint) == kDenseCheckpointMagic) {
        const DenseAdapter dense = read_dense_checkpoint(a.checkpoint);
        if (dense.dim() != test.set.d()) throw Error(ErrorKind::DimMismatch, "checkpoint d differs from test set");
        adapted = evaluate(dense, test.set, prompts.prompts);
        zero_shot = evaluate(BilinearAdapter::zero_shot(dense.dim(), dense.logit_scale, dense.bias, dense.mode),
                             test.set, prompts.prompts);
        extra = {{"structure", "dense"}, {"mode", mode_name(dense.mode)}};
    } else {
        const BilinearAdapter adapter = read_checkpoint(a.checkpoint);
        if (adapter.dim() != test.set.d()) throw Error(ErrorKind::DimMismatch, "checkpoint d differs from test set");
        adapted = evaluate(adapter, test.set, prompts.prompts);
        zero_shot = evaluate(BilinearAdapter::zero_shot(adapter.dim(), adapter.logit_scale, adapter.bias, adapter.mode),
                             test.set, prompts.prompts);
        extra = {{"structure", "upper-tri"}, {"mode", mode_name(adapter.mode)}};
    }
    json report{{"zero_shot_acc", zero_shot}, {"adapted_acc", adapted}, {"delta", adapted - zero_shot},
                {"n", test.set.n()}};
    report.update(extra);
    const std::string text = report.dump(2) + "\n";
    std::cout << text;

    if (!a.out.empty()) {
        const fs::path out(a.out);
        ensure_dir(out);
        write_text(out / "eval.json", text);
        RunManifest m("eval", argv);
        m.add_input(a.checkpoint);
        m.add_input(a.test);
        m.add_input(a.prompts);
        m.add_output(out / "eval.json");
        m.write(out);
    }
    return 0;
}

int run_analyze(const AnalyzeArgs& a, const std::vector<std::string>& argv) {
    const LoadedEmbeddings test = read_embedding_set(a.test);
    const LoadedPrompts prompts = read_prompt_set(a.prompts);

    const BilinearAdapter adapter =
        a.zero_shot ? BilinearAdapter::zero_shot(test.set.d(), prompts.meta.logit_scale, 0.0f, Mode::Clip)
                    : read_checkpoint(a.checkpoint);
    if (adapter.dim() != test.set.d()) throw Error(ErrorKind::DimMismatch, "checkpoint d differs from test set");

    AnalysisConfig cfg;
    cfg.negatives = a.negatives;
    cfg.seed = a.seed;
    cfg.grid_points = a.grid_points;
    const OverlapReport report = analyze(adapter, test.set, prompts.prompts, cfg);

    const fs::path out(a.out);
    ensure_dir(out);
    write_text(out / "report.json", report_json(report));
    write_text(out / "curves.csv", report_csv(report));

    RunManifest m("analyze", argv);
    m.set_config({{"negatives", cfg.negatives}, {"grid_points", cfg.grid_points},
                  {"source", a.zero_shot ? "zero-shot" : "checkpoint"}});
    m.add_seed("seed", cfg.seed);
    if (!a.zero_shot) m.add_input(a.checkpoint);
    m.add_input(a.test);
    m.add_input(a.prompts);
    m.add_output(out / "report.json");
    m.add_output(out / "curves.csv");
    m.write(out);

    std::cout << "overlap area " << report.overlap_area << ", orthogonality error " << report.orthogonality_error
              << '\n';
    return 0;
}

} // namespace

int run(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);

    CLI::App app{"Upper-triangular bilinear adapters for vision-language embeddings"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic task with a planted transform");
    s->add_option("--d", synth.d, "Embedding dimension")->check(CLI::PositiveNumber);
    s->add_option("--k", synth.k, "Number of classes")->check(CLI::PositiveNumber);
    s->add_option("--shots-available", synth.shots_available, "Training samples per class");
    s->add_option("--test-per-class", synth.test_per_class, "Test samples per class");
    s->add_option("--noise", synth.noise, "Gaussian noise sigma");
    s->add_option("--transform", synth.transform)
        ->check(CLI::IsMember({"none", "planted-upper-tri", "planted-orthogonal"}));
    s->add_option("--seed", synth.seed);
    s->add_option("--logit-scale", synth.logit_scale, "Stored e^s");
    s->add_option("--bias", synth.bias);
    s->add_option("--out", synth.out, "Output directory")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Fit W on a few-shot split");
    t->add_option("--train", tr.train)->required();
    t->add_option("--prompts", tr.prompts)->required();
    t->add_option("--test", tr.test, "Optional test set for per-epoch accuracy");
    t->add_option("--mode", tr.mode)->check(CLI::IsMember({"clip", "siglip"}));
    t->add_option("--shots", tr.shots)->check(CLI::PositiveNumber);
    t->add_option("--epochs", tr.epochs)->check(CLI::Range(0, 10000));
    t->add_option("--seed", tr.seed);
    t->add_option("--structure", tr.structure)->check(CLI::IsMember({"upper-tri", "dense"}));
    t->add_option("--init", tr.init)->check(CLI::IsMember({"identity", "random"}));
    t->add_option("--lr", tr.lr)->check(CLI::PositiveNumber);
    t->add_option("--weight-decay", tr.weight_decay)->check(CLI::NonNegativeNumber);
    t->add_option("--decay-diagonal", tr.decay_diagonal, "false: decay the diagonal toward 1");
    t->add_option("--max-batch-classes", tr.max_batch_classes)->check(CLI::PositiveNumber);
    t->add_option("--out", tr.out)->required();

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint against zero-shot");
    e->add_option("--checkpoint", ev.checkpoint)->required();
    e->add_option("--test", ev.test)->required();
    e->add_option("--prompts", ev.prompts)->required();
    e->add_option("--out", ev.out, "Optional output directory for eval.json + manifest");

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "Angular overlap and orthogonality report");
    auto* ckpt = a->add_option("--checkpoint", an.checkpoint);
    auto* zs = a->add_flag("--zero-shot", an.zero_shot, "Analyze the identity (zero-shot) head");
    ckpt->excludes(zs);
    a->add_option("--test", an.test)->required();
    a->add_option("--prompts", an.prompts)->required();
    a->add_option("--negatives", an.negatives, "Negatives per image")->check(CLI::PositiveNumber);
    a->add_option("--seed", an.seed);
    a->add_option("--grid-points", an.grid_points);
    a->add_option("--out", an.out)->required();

    try {
        app.parse(argc, argv);
        if (a->parsed() && !an.zero_shot && an.checkpoint.empty()) {
            throw CLI::RequiredError("one of --checkpoint or --zero-shot");
        }
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForAllHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForVersion& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return 2;
    }

    try {
        if (s->parsed()) return run_synth(synth, args);
        if (t->parsed()) return run_train(tr, args);
        if (e->parsed()) return run_eval(ev, args);
        if (a->parsed()) return run_analyze(an, args);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: IoFailure: " << err.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace biadapt::cli

int main(int argc, char** argv) { return biadapt::cli::run(argc, argv); }
