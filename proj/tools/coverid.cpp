// coverid: cover-song metric learning and retrieval pipeline.
//
// Subcommands: synth, train, embed, eval-lookup, live-id, histogram,
// preprocess. Every command is deterministic given its inputs and --seed;
// all randomness flows from explicit seeds.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coverid/catalog.hpp"
#include "coverid/encoder.hpp"
#include "coverid/errors.hpp"
#include "coverid/eval.hpp"
#include "coverid/live.hpp"
#include "coverid/metric.hpp"
#include "coverid/preprocess.hpp"
#include "coverid/salience.hpp"
#include "coverid/store.hpp"
#include "coverid/trainer.hpp"

namespace fs = std::filesystem;
using namespace coverid;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

fs::path resolve(const fs::path& base_dir, const std::string& locator) {
    fs::path p(locator);
    return p.is_absolute() ? p : base_dir / p;
}

// Flattens each track's feature file into one row (row-major), optionally
// running the salience preprocessing first.
Matrix load_feature_rows(const Catalog& catalog, const fs::path& base_dir,
                         bool do_preprocess, const PreprocessConfig& pcfg) {
    Matrix rows;
    for (size_t t = 0; t < catalog.n_tracks(); ++t) {
        const TrackEntry& e = catalog.tracks()[t];
        SalienceMatrix m = read_sal1(resolve(base_dir, e.path));
        Matrix feat;
        if (do_preprocess) {
            validate(m);
            feat = preprocess(m, pcfg);
        } else {
            feat = std::move(m.data);
        }
        const Index dim = feat.rows() * feat.cols();
        if (t == 0) rows.resize(static_cast<Index>(catalog.n_tracks()), dim);
        if (dim != rows.cols())
            throw ShapeMismatchError("feature size mismatch for track " + e.track_id);
        Index i = 0;
        for (Index r = 0; r < feat.rows(); ++r)
            for (Index c = 0; c < feat.cols(); ++c) rows(static_cast<Index>(t), i++) = feat(r, c);
    }
    return rows;
}

struct PreprocessFlags {
    bool enabled = false;
    PreprocessConfig cfg;
};

void add_preprocess_flags(CLI::App* cmd, PreprocessFlags& f, bool with_switch) {
    if (with_switch)
        cmd->add_flag("--preprocess", f.enabled,
                      "Run salience preprocessing on each feature file");
    cmd->add_option("--n-octaves", f.cfg.n_octaves, "Octaves kept around the mean pitch");
    cmd->add_option("--target-frames", f.cfg.target_frames, "Output time rows");
    cmd->add_option("--max-seconds", f.cfg.max_seconds, "Leading seconds considered");
    cmd->add_option("--pool-factor", f.cfg.freq_pool_factor,
                    "Frequency pool factor (0 = input bins_per_semitone)");
}

std::vector<std::string> read_id_list(const std::string& csv_list,
                                      const std::string& file_path) {
    std::vector<std::string> ids;
    if (!csv_list.empty()) {
        size_t start = 0;
        while (start <= csv_list.size()) {
            const size_t comma = csv_list.find(',', start);
            const std::string id = csv_list.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!id.empty()) ids.push_back(id);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    if (!file_path.empty()) {
        std::ifstream in(file_path);
        if (!in) throw IoError("cannot open: " + file_path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) ids.push_back(line);
        }
    }
    return ids;
}

struct CommonOpts {
    std::string out = ".";
    uint64_t seed = 0;
    int threads = 1;
};

int cmd_synth(const SyntheticSpec& spec, const CommonOpts& common) {
    const SyntheticResult result = generate_synthetic(spec);
    const fs::path out_dir(common.out);
    fs::create_directories(out_dir / "features");
    save_catalog(out_dir / "catalog.csv", result.catalog);
    for (size_t t = 0; t < result.catalog.n_tracks(); ++t) {
        SalienceMatrix m;
        m.bins_per_semitone = 1;
        m.frames_per_second = 1.0;
        m.data = result.features.row(static_cast<Index>(t));
        write_sal1(out_dir / result.catalog.tracks()[t].path, m);
    }
    std::cout << "synth: works=" << result.catalog.n_works()
              << " tracks=" << result.catalog.n_tracks() << " dim=" << spec.feature_dim
              << " out=" << out_dir.string() << "\n";
    return 0;
}

struct TrainOpts {
    std::string catalog_path;
    TrainConfig cfg;
    std::string loss = "prototypical";
    std::string nonlinearity = "rectifier";
    std::vector<int> hidden;
    int embed_dim = 128;
    bool normalize = false;
    PreprocessFlags prep;
};

int cmd_train(const TrainOpts& opts, const CommonOpts& common) {
    const fs::path catalog_path(opts.catalog_path);
    const Catalog catalog = load_catalog(catalog_path);
    const Matrix features = load_feature_rows(catalog, catalog_path.parent_path(),
                                              opts.prep.enabled, opts.prep.cfg);
    const TrainingSet ts = make_training_set(catalog, features);

    EncoderSpec spec;
    spec.input_dim = static_cast<int>(features.cols());
    spec.hidden_dims = opts.hidden;
    spec.embed_dim = opts.embed_dim;
    spec.nonlinearity = opts.nonlinearity == "tanh" ? Nonlinearity::tanh
                                                    : Nonlinearity::rectifier;
    spec.normalize_output = opts.normalize;

    TrainConfig cfg = opts.cfg;
    cfg.seed = common.seed;
    cfg.loss_kind = opts.loss == "standard" ? LossKind::standard : LossKind::prototypical;

    const TrainResult result = train(ts, spec, cfg);

    const fs::path out_dir(common.out);
    fs::create_directories(out_dir);
    write_enc1(out_dir / "model.enc", spec, result.params);
    write_training_log_csv(out_dir / "train_log.csv", result.log);

    const double final_loss = result.log.empty() ? 0.0 : result.log.back().loss;
    std::cout << "train: steps=" << cfg.steps << " loss=" << opts.loss
              << " final_loss=" << fmt17(final_loss) << " model="
              << (out_dir / "model.enc").string() << "\n";
    return 0;
}

struct EmbedOpts {
    std::string catalog_path;
    std::string model_path;
    PreprocessFlags prep;
};

int cmd_embed(const EmbedOpts& opts, const CommonOpts& common) {
    const fs::path catalog_path(opts.catalog_path);
    const Catalog catalog = load_catalog(catalog_path);
    const auto [spec, params] = read_enc1(opts.model_path);
    const Matrix features = load_feature_rows(catalog, catalog_path.parent_path(),
                                              opts.prep.enabled, opts.prep.cfg);
    const Matrix embeddings = encoder_forward(spec, params, features);

    std::vector<std::string> track_ids, work_ids;
    for (const TrackEntry& e : catalog.tracks()) {
        track_ids.push_back(e.track_id);
        work_ids.push_back(e.work_id);
    }
    const fs::path out_dir(common.out);
    fs::create_directories(out_dir);
    write_embeddings(out_dir / "embeddings.emb", out_dir / "embeddings.csv", embeddings,
                     track_ids, work_ids);
    std::cout << "embed: tracks=" << embeddings.rows() << " dim=" << embeddings.cols()
              << " out=" << (out_dir / "embeddings.emb").string() << "\n";
    return 0;
}

struct EvalOpts {
    std::string embeddings_path;
    std::string mode = "both";
    int k = 10;
};

int cmd_eval_lookup(const EvalOpts& opts, const CommonOpts& common) {
    const fs::path emb_path(opts.embeddings_path);
    fs::path sidecar = emb_path;
    sidecar.replace_extension(".csv");
    const EmbeddingStore store = load_store(emb_path, sidecar);

    // The sidecar doubles as the catalog for the query split.
    std::vector<TrackEntry> entries;
    for (Index t = 0; t < store.size(); ++t)
        entries.push_back({store.track_ids()[t], store.work_ids()[t], ""});
    const Catalog catalog(std::move(entries));
    std::mt19937_64 rng(common.seed);
    const std::vector<std::string> queries = query_reference_split(catalog, rng);

    std::vector<EvalReport> reports;
    if (opts.mode == "samples" || opts.mode == "both")
        reports.push_back(
            evaluate_lookup(store, queries, LookupMode::samples, opts.k, common.threads));
    if (opts.mode == "classes" || opts.mode == "both")
        reports.push_back(
            evaluate_lookup(store, queries, LookupMode::classes, opts.k, common.threads));
    if (reports.empty()) throw InvalidConfigError("mode must be samples, classes or both");

    const fs::path out_dir(common.out);
    fs::create_directories(out_dir);
    write_eval_summary_csv(out_dir / "eval_summary.csv", reports);
    for (const EvalReport& r : reports) {
        write_eval_queries_csv(out_dir / ("eval_queries_" + r.mode + ".csv"), r);
        std::cout << "eval-lookup: mode=" << r.mode << " map=" << fmt17(r.map)
                  << " mt@10=" << fmt17(r.mean_mt10)
                  << " mt@10_norm=" << fmt17(r.mean_mt10_norm)
                  << " n_queries=" << r.n_queries << " skipped=" << r.n_skipped << "\n";
    }
    return 0;
}

struct LiveOpts {
    std::string concert_path;
    std::string embeddings_path;
    std::string model_path;
    WindowingConfig window;
    std::string featurize = "preprocess";
    std::string truth_csv;
    std::string truth_file;
    PreprocessFlags prep;
};

int cmd_live_id(const LiveOpts& opts, const CommonOpts& common) {
    const SalienceMatrix concert = read_sal1(opts.concert_path);
    fs::path sidecar(opts.embeddings_path);
    sidecar.replace_extension(".csv");
    const EmbeddingStore store = load_store(opts.embeddings_path, sidecar);
    const auto [spec, params] = read_enc1(opts.model_path);

    const PreprocessConfig pcfg = opts.prep.cfg;
    const bool mean_mode = opts.featurize == "mean";
    const WindowEmbedder embedder = [&](const SalienceMatrix& window) -> RowVector {
        Matrix feat;
        if (mean_mode) {
            feat = window.data.colwise().mean();
        } else {
            feat = preprocess(window, pcfg);
        }
        Matrix flat(1, feat.rows() * feat.cols());
        Index i = 0;
        for (Index r = 0; r < feat.rows(); ++r)
            for (Index c = 0; c < feat.cols(); ++c) flat(0, i++) = feat(r, c);
        return encoder_forward(spec, params, flat).row(0);
    };

    const IdentifyResult result = identify(concert, store, embedder, opts.window);

    const std::vector<std::string> truth_ids =
        read_id_list(opts.truth_csv, opts.truth_file);
    const std::unordered_set<std::string> truth(truth_ids.begin(), truth_ids.end());

    const fs::path out_dir(common.out);
    fs::create_directories(out_dir);
    write_candidates_csv(out_dir / "candidates.csv", result.candidates,
                         truth.empty() ? nullptr : &truth);
    write_timeline_csv(out_dir / "timeline.csv", result, store, truth);

    std::cout << "live-id: windows=" << result.window_starts.size()
              << " candidates=" << result.candidates.size();
    if (!truth.empty()) {
        std::vector<std::string> candidate_ids;
        for (const Candidate& c : result.candidates) candidate_ids.push_back(c.ref_id);
        std::cout << " r_precision=" << fmt17(r_precision(candidate_ids, truth));
    }
    std::cout << "\n";
    return 0;
}

int cmd_histogram(const std::vector<std::string>& inputs, const CommonOpts& common) {
    std::vector<SalienceMatrix> matrices;
    for (const std::string& path : inputs) matrices.push_back(read_sal1(path));
    const Vector hist = pitch_histogram(matrices);

    const fs::path out_dir(common.out);
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "histogram.csv", std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + (out_dir / "histogram.csv").string());
    out << "semitone,total_salience\n";
    for (Index s = 0; s < hist.size(); ++s)
        out << s << ',' << fmt17(hist(s)) << '\n';
    std::cout << "histogram: inputs=" << inputs.size() << " semitones=" << hist.size()
              << " out=" << (out_dir / "histogram.csv").string() << "\n";
    return 0;
}

struct PreprocessOpts {
    std::string input_path;
    std::string output_path;
    PreprocessFlags prep;
};

int cmd_preprocess(const PreprocessOpts& opts) {
    SalienceMatrix m = read_sal1(opts.input_path);
    validate(m);
    const PreprocessConfig& cfg = opts.prep.cfg;

    const double center = weighted_mean_pitch(m);
    SalienceMatrix trimmed = trim_octaves(m, center, cfg.n_octaves);
    const int factor =
        cfg.freq_pool_factor > 0 ? cfg.freq_pool_factor : m.bins_per_semitone;
    SalienceMatrix pooled = downscale_frequency(trimmed, factor);
    SalienceMatrix fitted = fit_time(pooled, cfg);

    write_sal1(opts.output_path, fitted);
    std::cout << "preprocess: " << opts.input_path << " -> " << opts.output_path
              << " shape=" << fitted.frames() << "x" << fitted.bins() << "\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonOpts& common, bool with_seed = true) {
    cmd->set_config("--config", "", "key = value config file (flags win)");
    cmd->allow_config_extras(false);
    cmd->add_option("--out", common.out, "Output directory");
    if (with_seed) cmd->add_option("--seed", common.seed, "RNG seed");
    cmd->add_option("--threads", common.threads, "Worker thread cap");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coverid: cover-song metric learning and retrieval"};
    app.require_subcommand(1);

    CommonOpts common;

    // synth
    SyntheticSpec synth_spec;
    std::vector<double> synth_weights;
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic catalog");
    synth->add_option("--works", synth_spec.n_works, "Number of works");
    synth->add_option("--dim", synth_spec.feature_dim, "Feature dimension");
    synth->add_option("--separation", synth_spec.work_separation, "Archetype scale");
    synth->add_option("--noise", synth_spec.cover_noise, "Per-cover noise sigma");
    synth->add_option("--transposition-max", synth_spec.transposition_max,
                      "Max circular shift");
    synth->add_option("--cover-weights", synth_weights,
                      "Weights for 2,3,4 covers per work")
        ->expected(3);
    add_common(synth, common);

    // train
    TrainOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train an encoder on a catalog");
    train_cmd->add_option("--catalog", train_opts.catalog_path, "Catalog CSV")->required();
    train_cmd->add_option("--loss", train_opts.loss, "standard | prototypical")
        ->check(CLI::IsMember({"standard", "prototypical"}));
    train_cmd->add_option("--margin", train_opts.cfg.triplet.margin, "Triplet margin");
    train_cmd->add_option("--lr", train_opts.cfg.learning_rate, "Learning rate");
    train_cmd->add_option("--momentum", train_opts.cfg.momentum, "Momentum in [0,1)");
    train_cmd->add_option("--steps", train_opts.cfg.steps, "Training steps");
    train_cmd->add_option("--batch-classes", train_opts.cfg.batch_classes,
                          "Classes per batch (P)");
    train_cmd->add_option("--samples-per-class", train_opts.cfg.samples_per_class,
                          "Samples per class (K)");
    train_cmd->add_option("--embed-dim", train_opts.embed_dim, "Embedding dimension");
    train_cmd->add_option("--hidden", train_opts.hidden, "Hidden layer sizes");
    train_cmd->add_option("--nonlinearity", train_opts.nonlinearity, "rectifier | tanh")
        ->check(CLI::IsMember({"rectifier", "tanh"}));
    train_cmd->add_flag("--normalize", train_opts.normalize, "Unit-normalize embeddings");
    add_preprocess_flags(train_cmd, train_opts.prep, true);
    add_common(train_cmd, common);

    // embed
    EmbedOpts embed_opts;
    auto* embed_cmd = app.add_subcommand("embed", "Embed a catalog with a trained model");
    embed_cmd->add_option("--catalog", embed_opts.catalog_path, "Catalog CSV")->required();
    embed_cmd->add_option("--model", embed_opts.model_path, "ENC1 model file")->required();
    add_preprocess_flags(embed_cmd, embed_opts.prep, true);
    add_common(embed_cmd, common, false);

    // eval-lookup
    EvalOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval-lookup", "Rank references and report metrics");
    eval_cmd->add_option("--embeddings", eval_opts.embeddings_path, "EMB1 file")->required();
    eval_cmd->add_option("--mode", eval_opts.mode, "samples | classes | both")
        ->check(CLI::IsMember({"samples", "classes", "both"}));
    eval_cmd->add_option("--k", eval_opts.k, "Top-k for MT@k");
    add_common(eval_cmd, common);

    // live-id
    LiveOpts live_opts;
    auto* live_cmd = app.add_subcommand("live-id", "Identify songs in a concert recording");
    live_cmd->add_option("--concert", live_opts.concert_path, "Concert SAL1 file")->required();
    live_cmd->add_option("--embeddings", live_opts.embeddings_path, "EMB1 reference store")
        ->required();
    live_cmd->add_option("--model", live_opts.model_path, "ENC1 model file")->required();
    live_cmd->add_option("--window", live_opts.window.window_seconds, "Window seconds");
    live_cmd->add_option("--hop", live_opts.window.hop_seconds, "Hop seconds");
    live_cmd->add_option("--min-consecutive", live_opts.window.min_consecutive,
                         "Minimum consecutive frames");
    live_cmd->add_option("--featurize", live_opts.featurize, "preprocess | mean")
        ->check(CLI::IsMember({"preprocess", "mean"}));
    live_cmd->add_option("--truth", live_opts.truth_csv, "Comma-separated ground-truth ids");
    live_cmd->add_option("--truth-file", live_opts.truth_file, "Ground-truth ids, one per line");
    add_preprocess_flags(live_cmd, live_opts.prep, false);
    add_common(live_cmd, common, false);

    // histogram
    std::vector<std::string> hist_inputs;
    auto* hist_cmd = app.add_subcommand("histogram", "Per-semitone salience totals");
    hist_cmd->add_option("inputs", hist_inputs, "SAL1 files")->required();
    add_common(hist_cmd, common, false);

    // preprocess
    PreprocessOpts prep_opts;
    auto* prep_cmd = app.add_subcommand("preprocess", "Preprocess one salience file");
    prep_cmd->add_option("--input", prep_opts.input_path, "Input SAL1")->required();
    prep_cmd->add_option("--output", prep_opts.output_path, "Output SAL1")->required();
    add_preprocess_flags(prep_cmd, prep_opts.prep, false);
    prep_cmd->set_config("--config", "", "key = value config file (flags win)");
    prep_cmd->allow_config_extras(false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            synth_spec.seed = common.seed;
            if (synth_weights.size() == 3)
                for (int i = 0; i < 3; ++i) synth_spec.cover_weights[i] = synth_weights[i];
            return cmd_synth(synth_spec, common);
        }
        if (train_cmd->parsed()) return cmd_train(train_opts, common);
        if (embed_cmd->parsed()) return cmd_embed(embed_opts, common);
        if (eval_cmd->parsed()) return cmd_eval_lookup(eval_opts, common);
        if (live_cmd->parsed()) return cmd_live_id(live_opts, common);
        if (hist_cmd->parsed()) return cmd_histogram(hist_inputs, common);
        if (prep_cmd->parsed()) return cmd_preprocess(prep_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
