// Acceptance suite: one line per criterion, nonzero exit on any failure.
//
// The desk-scale experiments here use synthetic catalogs; large-corpus
// absolute scores are out of reach by construction, so the suite checks
// exact kernels against oracles and behavioral directions end to end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

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
#include "oracles.hpp"

using namespace coverid;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- criterion 1

bool gradient_fidelity(std::string* detail) {
    const auto start = Clock::now();
    const TripletConfig cfg;
    const double kink_tol = 1e-3;
    long checked_std = 0, checked_proto = 0, failures = 0;

    // Batch shapes cycle through B <= 20, d <= 16.
    const int shapes[][3] = {{3, 3, 4}, {4, 2, 8}, {5, 2, 16}, {4, 4, 6}, {2, 4, 12}};
    uint64_t seed = 1;
    while (checked_std < 100 && seed < 100000) {
        const auto& s = shapes[seed % 5];
        std::mt19937_64 rng(seed++);
        const EmbeddingBatch batch = oracles::random_batch(s[0], s[1], s[2], rng);
        if (!oracles::mining_is_stable(batch, cfg.margin, kink_tol)) continue;
        const LossResult res = loss_standard(batch, cfg);
        const Matrix fd = oracles::fd_gradient(
            batch, [&](const EmbeddingBatch& b) { return loss_standard(b, cfg).loss; });
        if (!oracles::grads_agree(res.grad, fd, 1e-5, 1e-8)) ++failures;
        ++checked_std;
    }
    seed = 500000;
    while (checked_proto < 100 && seed < 600000) {
        const auto& s = shapes[seed % 5];
        std::mt19937_64 rng(seed++);
        // Prototypical loss also admits singleton classes.
        const int per_class = (seed % 7 == 0) ? 1 : s[1];
        const EmbeddingBatch batch = oracles::random_batch(s[0], per_class, s[2], rng);
        if (!oracles::mining_is_stable_prototypical(batch, cfg.margin, kink_tol)) continue;
        const LossResult res = loss_prototypical(batch, cfg);
        const Matrix fd = oracles::fd_gradient(batch, [&](const EmbeddingBatch& b) {
            return loss_prototypical(b, cfg).loss;
        });
        if (!oracles::grads_agree(res.grad, fd, 1e-5, 1e-8)) ++failures;
        ++checked_proto;
    }

    const double elapsed = seconds_since(start);
    std::ostringstream ss;
    ss << checked_std << "+" << checked_proto << " batches, " << failures
       << " gradient mismatches, " << elapsed << " s";
    *detail = ss.str();
    return checked_std >= 100 && checked_proto >= 100 && failures == 0 && elapsed < 30.0;
}

// ---------------------------------------------------------------- criterion 2

bool prototype_correctness(std::string* detail) {
    long failures = 0;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        std::mt19937_64 rng(seed + 7000);
        const int n_classes = 2 + static_cast<int>(seed % 5);
        const int per_class = 1 + static_cast<int>(seed % 4);
        const int dim = 2 + static_cast<int>(seed % 9);
        const EmbeddingBatch batch = oracles::random_batch(n_classes, per_class, dim, rng);
        const PrototypeSet protos = compute_prototypes(batch);

        for (Index i = 0; i < protos.delta.rows(); ++i)
            if (std::abs(protos.delta.row(i).sum() - 1.0) > 1e-12) ++failures;

        std::vector<int> ids;
        const Matrix oracle = oracles::naive_class_means(batch, &ids);
        if (ids != protos.class_ids) ++failures;
        if ((protos.prototypes - oracle).cwiseAbs().maxCoeff() > 1e-12) ++failures;
        // The matrix form is the definition; it must hold bit for bit.
        if ((protos.prototypes - protos.delta * batch.embeddings).cwiseAbs().maxCoeff() !=
            0.0)
            ++failures;
    }
    *detail = failures == 0 ? "1000 batches clean" : std::to_string(failures) + " failures";
    return failures == 0;
}

// ---------------------------------------------------------------- criterion 3

bool mining_oracle(std::string* detail) {
    const TripletConfig cfg;
    long failures = 0;
    for (uint64_t seed = 0; seed < 500; ++seed) {
        std::mt19937_64 rng(seed + 9000);
        const int n_classes = 2 + static_cast<int>(seed % 5);
        const int per_class = 2 + static_cast<int>(seed % 3); // B <= 24
        const int dim = 2 + static_cast<int>(seed % 7);
        const EmbeddingBatch batch = oracles::random_batch(n_classes, per_class, dim, rng);

        const TripletSet mined = mine_semihard_standard(batch, cfg);
        const auto oracle = oracles::enumerate_semihard_standard(batch, cfg.margin);
        if (mined.triplets.size() != oracle.size()) {
            ++failures;
        } else {
            for (size_t i = 0; i < oracle.size(); ++i)
                if (mined.triplets[i].anchor != oracle[i].anchor ||
                    mined.triplets[i].positive != oracle[i].positive ||
                    mined.triplets[i].negative != oracle[i].negative)
                    ++failures;
        }

        const PrototypeSet protos = compute_prototypes(batch);
        const TripletSet mined_p = mine_semihard_prototypical(batch, protos, cfg);
        const auto oracle_p = oracles::enumerate_semihard_prototypical(batch, cfg.margin);
        if (mined_p.triplets.size() != oracle_p.size()) {
            ++failures;
        } else {
            for (size_t i = 0; i < oracle_p.size(); ++i)
                if (mined_p.triplets[i].anchor != oracle_p[i].anchor ||
                    mined_p.triplets[i].positive != oracle_p[i].positive ||
                    mined_p.triplets[i].negative != oracle_p[i].negative)
                    ++failures;
        }
    }
    *detail = failures == 0 ? "500 batches, both modes identical"
                            : std::to_string(failures) + " mismatches";
    return failures == 0;
}

// ---------------------------------------------------------------- criterion 4

bool metric_oracles(std::string* detail) {
    long failures = 0;
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> len_dist(1, 40);
        const int len = len_dist(rng);
        std::uniform_int_distribution<int> coin(0, 3);
        std::vector<char> rel(len);
        long in_list = 0;
        for (int i = 0; i < len; ++i) {
            rel[i] = coin(rng) == 0 ? 1 : 0;
            in_list += rel[i];
        }
        std::uniform_int_distribution<long> extra(0, 3);
        const long total = std::max<long>(1, in_list + extra(rng));
        RelevanceJudgment j;
        j.relevant = rel;
        j.total_relevant = total;

        if (average_precision(j) != oracles::oracle_average_precision(rel, total))
            ++failures;
        if (mt_at_k(j, 10) != oracles::oracle_mt_at_k(rel, 10)) ++failures;
        const double norm_expected =
            static_cast<double>(oracles::oracle_mt_at_k(rel, 10)) /
            static_cast<double>(std::min<long>(10, total));
        if (normalized_mt_at_k(j, 10) != norm_expected) ++failures;

        // R-precision on a random candidate/truth pair.
        std::vector<std::string> candidates;
        std::unordered_set<std::string> truth;
        std::uniform_int_distribution<int> id_dist(0, 30);
        for (int i = 0; i < 20; ++i)
            candidates.push_back("id" + std::to_string(id_dist(rng)));
        for (int i = 0; i < 8; ++i) truth.insert("id" + std::to_string(id_dist(rng)));
        long correct = 0;
        for (size_t i = 0; i < candidates.size() && i < truth.size(); ++i) {
            // A candidate list may repeat ids; count each occurrence like the
            // implementation does.
            correct += truth.count(candidates[i]) ? 1 : 0;
        }
        const double expected =
            static_cast<double>(correct) / static_cast<double>(truth.size());
        if (r_precision(candidates, truth) != expected) ++failures;
    }

    // Worked example: relevant at ranks 1 and 3 with 2 relevant overall.
    RelevanceJudgment worked;
    worked.relevant = {1, 0, 1};
    worked.total_relevant = 2;
    const double ap = average_precision(worked);
    if (ap != (1.0 + 2.0 / 3.0) / 2.0) ++failures;
    const double ulp = std::nextafter(5.0 / 6.0, 1.0) - 5.0 / 6.0;
    if (std::abs(ap - 5.0 / 6.0) > ulp) ++failures;

    // MAP over a random judgment set against a direct mean.
    std::vector<RelevanceJudgment> js;
    double oracle_sum = 0.0;
    for (int q = 0; q < 100; ++q) {
        std::vector<char> rel(20);
        long in_list = 0;
        std::uniform_int_distribution<int> coin(0, 2);
        for (int i = 0; i < 20; ++i) {
            rel[i] = coin(rng) == 0 ? 1 : 0;
            in_list += rel[i];
        }
        RelevanceJudgment j;
        j.relevant = rel;
        j.total_relevant = std::max<long>(1, in_list);
        js.push_back(j);
        oracle_sum += oracles::oracle_average_precision(rel, j.total_relevant);
    }
    if (std::abs(mean_average_precision(js) - oracle_sum / 100.0) > 1e-15) ++failures;

    *detail = failures == 0 ? "1000 fixtures exact, AP worked example at 1 ulp of 5/6"
                            : std::to_string(failures) + " mismatches";
    return failures == 0;
}

// ------------------------------------------------------- criteria 5 and 6

struct LookupScores {
    double map_samples;
    double map_classes;
};

LookupScores run_lookup_experiment(double separation, double noise, LossKind kind,
                                   uint64_t seed, int steps) {
    SyntheticSpec sspec;
    sspec.n_works = 200;
    sspec.cover_weights = {1.0, 1.0, 1.0}; // covers uniform in {2,3,4}
    sspec.feature_dim = 32;
    sspec.work_separation = separation;
    sspec.cover_noise = noise;
    sspec.transposition_max = 2;
    sspec.seed = seed;
    const SyntheticResult synth = generate_synthetic(sspec);
    const TrainingSet ts = make_training_set(synth.catalog, synth.features);

    EncoderSpec espec;
    espec.input_dim = 32;
    espec.embed_dim = 32; // linear encoder

    TrainConfig cfg;
    cfg.batch_classes = 8;
    cfg.samples_per_class = 2;
    cfg.steps = steps;
    cfg.learning_rate = 0.02;
    cfg.momentum = 0.9;
    cfg.seed = seed + 1;
    cfg.loss_kind = kind;

    const TrainResult trained = train(ts, espec, cfg);
    const Matrix embeddings = encoder_forward(espec, trained.params, synth.features);

    std::vector<std::string> track_ids, work_ids;
    for (const TrackEntry& e : synth.catalog.tracks()) {
        track_ids.push_back(e.track_id);
        work_ids.push_back(e.work_id);
    }
    const EmbeddingStore store = build_store(embeddings, track_ids, work_ids);

    std::mt19937_64 split_rng(seed + 2);
    const std::vector<std::string> queries =
        query_reference_split(synth.catalog, split_rng);

    const EvalReport samples = evaluate_lookup(store, queries, LookupMode::samples);
    const EvalReport classes = evaluate_lookup(store, queries, LookupMode::classes);
    return {samples.map, classes.map};
}

bool end_to_end_lookup(std::string* detail) {
    const auto start = Clock::now();
    // Separation/noise ratio 10.
    const LookupScores s =
        run_lookup_experiment(1.0, 0.1, LossKind::prototypical, 100, 2000);
    const double elapsed = seconds_since(start);
    std::ostringstream ss;
    ss << "map_samples=" << s.map_samples << " map_classes=" << s.map_classes << " in "
       << elapsed << " s";
    *detail = ss.str();
    return s.map_samples >= 0.9 && s.map_classes >= 0.9 && elapsed < 120.0;
}

bool prototypical_direction(std::string* detail) {
    // Separation/noise ratio 3 (harder), five seeds, both losses.
    double mean_std_samples = 0.0, mean_proto_samples = 0.0;
    int classes_wins = 0;
    std::ostringstream ss;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        const LookupScores std_scores =
            run_lookup_experiment(1.0, 1.0 / 3.0, LossKind::standard, seed * 10, 2000);
        const LookupScores proto_scores =
            run_lookup_experiment(1.0, 1.0 / 3.0, LossKind::prototypical, seed * 10, 2000);
        mean_std_samples += std_scores.map_samples;
        mean_proto_samples += proto_scores.map_samples;
        if (proto_scores.map_classes > std_scores.map_classes) ++classes_wins;
        ss << "s" << seed << "[" << std_scores.map_classes << "/"
           << proto_scores.map_classes << "] ";
    }
    mean_std_samples /= 5.0;
    mean_proto_samples /= 5.0;
    ss << "samples mean std=" << mean_std_samples << " proto=" << mean_proto_samples
       << " classes wins=" << classes_wins << "/5";
    *detail = ss.str();
    return mean_proto_samples >= mean_std_samples - 0.01 && classes_wins >= 4;
}

// ---------------------------------------------------------------- criterion 7

bool live_id_fixture(std::string* detail) {
    // 250 works x 2 covers = 500 reference tracks.
    SyntheticSpec sspec;
    sspec.n_works = 250;
    sspec.cover_weights = {1.0, 0.0, 0.0};
    sspec.feature_dim = 32;
    sspec.work_separation = 1.0;
    sspec.cover_noise = 0.01;
    sspec.transposition_max = 0;
    sspec.seed = 77;
    const SyntheticResult synth = generate_synthetic(sspec);

    std::vector<std::string> track_ids, work_ids;
    for (const TrackEntry& e : synth.catalog.tracks()) {
        track_ids.push_back(e.track_id);
        work_ids.push_back(e.work_id);
    }
    const EmbeddingStore store = build_store(synth.features, track_ids, work_ids);

    // Eight songs with at least 3 windows each, two 2-window spurious
    // insertions. Window = hop = 90 s at 1 fps keeps windows pure.
    WindowingConfig cfg;
    cfg.window_seconds = 90.0;
    cfg.hop_seconds = 90.0;
    cfg.min_consecutive = 3;

    const std::vector<int> song_tracks{2, 31, 64, 101, 150, 201, 310, 420};
    const std::vector<int> song_windows{5, 3, 4, 3, 5, 3, 4, 4};
    const int spurious_a = 87, spurious_b = 333; // 2 windows each
    std::vector<int> window_of_track;
    for (size_t s = 0; s < song_tracks.size(); ++s) {
        for (int w = 0; w < song_windows[s]; ++w) window_of_track.push_back(song_tracks[s]);
        if (s == 1)
            for (int w = 0; w < 2; ++w) window_of_track.push_back(spurious_a);
        if (s == 4)
            for (int w = 0; w < 2; ++w) window_of_track.push_back(spurious_b);
    }

    SalienceMatrix concert;
    concert.bins_per_semitone = 1;
    concert.frames_per_second = 1.0;
    concert.data.resize(static_cast<Index>(window_of_track.size()) * 90, 32);
    Index row = 0;
    for (int track : window_of_track)
        for (int f = 0; f < 90; ++f) concert.data.row(row++) = synth.features.row(track);

    const WindowEmbedder embedder = [](const SalienceMatrix& w) -> RowVector {
        return w.data.colwise().mean();
    };
    const IdentifyResult result = identify(concert, store, embedder, cfg);

    // Window count formula.
    const double duration =
        static_cast<double>(concert.frames()) / concert.frames_per_second;
    const long expected_windows =
        static_cast<long>(std::floor((duration - cfg.window_seconds) / cfg.hop_seconds)) + 1;
    const bool window_count_ok =
        static_cast<long>(result.window_starts.size()) == expected_windows &&
        expected_windows == static_cast<long>(window_of_track.size());

    std::unordered_set<std::string> truth;
    for (int t : song_tracks) truth.insert(track_ids[t]);
    std::vector<std::string> candidate_ids;
    bool spurious_seen = false;
    for (const Candidate& c : result.candidates) {
        candidate_ids.push_back(c.ref_id);
        if (c.ref_id == track_ids[spurious_a] || c.ref_id == track_ids[spurious_b])
            spurious_seen = true;
        if (c.run_length < cfg.min_consecutive) spurious_seen = true;
    }
    const double rp = r_precision(candidate_ids, truth);

    std::ostringstream ss;
    ss << "windows=" << result.window_starts.size() << " candidates="
       << result.candidates.size() << " r_precision=" << rp
       << (spurious_seen ? " spurious leaked" : "");
    *detail = ss.str();
    return window_count_ok && rp == 1.0 && !spurious_seen;
}

// ---------------------------------------------------------------- criterion 8

bool preprocessing_shape(std::string* detail) {
    long failures = 0;
    {
        std::mt19937_64 rng(81);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        SalienceMatrix m;
        m.bins_per_semitone = 5;
        m.frames_per_second = 28.44;
        m.data.resize(5120, 360);
        for (Index r = 0; r < 5120; ++r)
            for (Index c = 0; c < 360; ++c) m.data(r, c) = u(rng);
        const Matrix feat = preprocess(m, PreprocessConfig{});
        if (feat.rows() != 1024 || feat.cols() != 60) ++failures;
    }
    std::mt19937_64 seeds(82);
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(seeds());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        SalienceMatrix m;
        m.bins_per_semitone = 5;
        m.frames_per_second = 28.44;
        m.data.resize(40, 360);
        for (Index r = 0; r < 40; ++r)
            for (Index c = 0; c < 360; ++c) m.data(r, c) = u(rng);

        // Locality: the trimmed window copies cells bitwise.
        const double center = weighted_mean_pitch(m);
        const SalienceMatrix trimmed = trim_octaves(m, center, 5);
        const Index lo = static_cast<Index>(std::floor(center + 0.5)) - 150;
        for (Index j = 0; j < trimmed.bins(); ++j) {
            const Index src = lo + j;
            if (src < 0 || src >= m.bins()) {
                if (trimmed.data.col(j).cwiseAbs().maxCoeff() != 0.0) ++failures;
            } else if ((trimmed.data.col(j) - m.data.col(src)).cwiseAbs().maxCoeff() !=
                       0.0) {
                ++failures;
            }
        }
        // Mass preservation through the frequency pooling.
        const SalienceMatrix pooled = downscale_frequency(trimmed, 5);
        const double lhs = pooled.data.sum() * 5.0;
        const double rhs = trimmed.data.sum();
        if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(rhs))) ++failures;
    }
    *detail = failures == 0 ? "shape 1024x60, locality and mass hold on 100 inputs"
                            : std::to_string(failures) + " failures";
    return failures == 0;
}

// ---------------------------------------------------------------- criterion 9

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "<missing:" + p.string() + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool pipeline_determinism(std::string* detail) {
    const char* bin = std::getenv("COVERID_BIN");
    if (!bin) {
        *detail = "COVERID_BIN not set";
        return false;
    }
    const fs::path base = fs::temp_directory_path() / "coverid_acceptance";
    fs::remove_all(base);

    auto run_pipeline = [&](const std::string& name) -> fs::path {
        const fs::path dir = base / name;
        fs::create_directories(dir);
        const std::string d = dir.string();
        const std::string steps[] = {
            std::string(bin) + " synth --works 30 --dim 16 --seed 4 --noise 0.05"
                               " --transposition-max 1 --out " + d,
            std::string(bin) + " train --catalog " + d + "/catalog.csv"
                               " --loss prototypical --steps 120 --batch-classes 4"
                               " --embed-dim 16 --lr 0.05 --seed 9 --out " + d,
            std::string(bin) + " embed --catalog " + d + "/catalog.csv --model " + d +
                               "/model.enc --out " + d,
            std::string(bin) + " eval-lookup --embeddings " + d + "/embeddings.emb"
                               " --mode both --seed 13 --out " + d,
        };
        for (const std::string& cmd : steps) {
            const std::string quiet = cmd + " > /dev/null 2>&1";
            if (std::system(quiet.c_str()) != 0) return fs::path();
        }
        return dir;
    };

    const fs::path a = run_pipeline("a");
    const fs::path b = run_pipeline("b");
    if (a.empty() || b.empty()) {
        *detail = "pipeline command failed";
        return false;
    }

    long mismatches = 0;
    std::vector<std::string> names{"catalog.csv",      "model.enc",
                                   "train_log.csv",    "embeddings.emb",
                                   "embeddings.csv",   "eval_summary.csv",
                                   "eval_queries_samples.csv",
                                   "eval_queries_classes.csv"};
    for (int t = 0; t < 30; ++t) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "features/w%04d_c1.sal", t);
        names.push_back(buf);
    }
    for (const std::string& name : names)
        if (slurp(a / name) != slurp(b / name)) ++mismatches;

    *detail = mismatches == 0 ? std::to_string(names.size()) + " files byte-identical"
                              : std::to_string(mismatches) + " files differ";
    return mismatches == 0;
}

} // namespace

int main() {
    std::string detail;

    detail.clear();
    report(1, "gradient fidelity vs central finite differences",
           gradient_fidelity(&detail), detail);

    detail.clear();
    report(2, "prototype and delta-matrix correctness", prototype_correctness(&detail),
           detail);

    detail.clear();
    report(3, "semi-hard mining equals exhaustive enumeration", mining_oracle(&detail),
           detail);

    detail.clear();
    report(4, "retrieval metrics match definition oracles", metric_oracles(&detail),
           detail);

    detail.clear();
    report(5, "end-to-end synthetic lookup reaches MAP 0.9", end_to_end_lookup(&detail),
           detail);

    detail.clear();
    report(6, "prototypical loss improves on the standard loss",
           prototypical_direction(&detail), detail);

    detail.clear();
    report(7, "live identification fixture", live_id_fixture(&detail), detail);

    detail.clear();
    report(8, "preprocessing shape and invariants", preprocessing_shape(&detail), detail);

    detail.clear();
    report(9, "pipeline byte determinism", pipeline_determinism(&detail), detail);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
