#include "coverid/live.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "coverid/errors.hpp"

namespace coverid {

std::vector<SalienceMatrix> window_concert(const SalienceMatrix& concert,
                                           const WindowingConfig& cfg) {
    if (cfg.window_seconds <= 0.0 || cfg.hop_seconds <= 0.0)
        throw InvalidConfigError("window and hop must be positive");
    if (cfg.hop_seconds > cfg.window_seconds)
        throw InvalidConfigError("hop must not exceed the window");

    const double fps = concert.frames_per_second;
    const double duration = static_cast<double>(concert.frames()) / fps;
    if (duration < cfg.window_seconds)
        throw TooShortError("concert shorter than one window");

    const long count = static_cast<long>(
        std::floor((duration - cfg.window_seconds) / cfg.hop_seconds + 1e-9)) + 1;
    const Index win_rows = static_cast<Index>(std::llround(cfg.window_seconds * fps));

    std::vector<SalienceMatrix> windows;
    windows.reserve(static_cast<size_t>(count));
    for (long i = 0; i < count; ++i) {
        const Index begin =
            static_cast<Index>(std::llround(static_cast<double>(i) * cfg.hop_seconds * fps));
        const Index rows = std::min<Index>(win_rows, concert.frames() - begin);
        SalienceMatrix w;
        w.bins_per_semitone = concert.bins_per_semitone;
        w.frames_per_second = fps;
        w.data = concert.data.middleRows(begin, rows);
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<FrameMatch> match_frames(const Matrix& frame_embeddings,
                                     const EmbeddingStore& store, double hop_seconds) {
    if (store.size() == 0) throw EmptyStoreError("reference store is empty");
    if (frame_embeddings.cols() != store.dim())
        throw ShapeMismatchError("frame embedding dimension does not match store");

    std::vector<FrameMatch> matches;
    matches.reserve(static_cast<size_t>(frame_embeddings.rows()));
    for (Index f = 0; f < frame_embeddings.rows(); ++f) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index r = 0; r < store.size(); ++r) {
            const double d = (frame_embeddings.row(f) - store.embeddings().row(r)).norm();
            if (d < best_d ||
                (d == best_d && best >= 0 &&
                 store.track_ids()[r] < store.track_ids()[best])) {
                best = static_cast<int>(r);
                best_d = d;
            }
        }
        matches.push_back({f, static_cast<double>(f) * hop_seconds,
                           store.track_ids()[best], best_d});
    }
    return matches;
}

std::vector<CandidateRun> filter_runs(const std::vector<FrameMatch>& matches,
                                      int min_consecutive) {
    if (min_consecutive < 1) throw InvalidConfigError("min_consecutive must be >= 1");
    std::vector<CandidateRun> runs;
    size_t i = 0;
    while (i < matches.size()) {
        size_t j = i + 1;
        double best = matches[i].best_distance;
        while (j < matches.size() && matches[j].best_ref_id == matches[i].best_ref_id) {
            best = std::min(best, matches[j].best_distance);
            ++j;
        }
        const long length = static_cast<long>(j - i);
        if (length >= min_consecutive)
            runs.push_back({matches[i].best_ref_id, matches[i].frame_index, length, best});
        i = j;
    }
    return runs;
}

std::vector<Candidate> rank_candidates(const std::vector<CandidateRun>& runs) {
    std::vector<Candidate> merged;
    for (const CandidateRun& run : runs) {
        auto it = std::find_if(merged.begin(), merged.end(),
                               [&](const Candidate& c) { return c.ref_id == run.ref_id; });
        if (it == merged.end()) {
            merged.push_back({run.ref_id, run.best_distance, run.run_length});
        } else {
            it->best_distance = std::min(it->best_distance, run.best_distance);
            it->run_length = std::max(it->run_length, run.run_length);
        }
    }
    std::sort(merged.begin(), merged.end(), [](const Candidate& a, const Candidate& b) {
        if (a.best_distance != b.best_distance) return a.best_distance < b.best_distance;
        if (a.run_length != b.run_length) return a.run_length > b.run_length;
        return a.ref_id < b.ref_id;
    });
    return merged;
}

IdentifyResult identify(const SalienceMatrix& concert, const EmbeddingStore& store,
                        const WindowEmbedder& embed_window, const WindowingConfig& cfg) {
    const std::vector<SalienceMatrix> windows = window_concert(concert, cfg);

    Matrix embeddings(static_cast<Index>(windows.size()), store.dim());
    IdentifyResult result;
    result.window_starts.reserve(windows.size());
    for (size_t i = 0; i < windows.size(); ++i) {
        const RowVector e = embed_window(windows[i]);
        if (e.cols() != store.dim())
            throw ShapeMismatchError("window embedding dimension does not match store");
        embeddings.row(static_cast<Index>(i)) = e;
        result.window_starts.push_back(static_cast<double>(i) * cfg.hop_seconds);
    }

    result.timeline = distance_matrix(embeddings, store, LookupMode::samples);
    result.matches = match_frames(embeddings, store, cfg.hop_seconds);
    result.candidates = rank_candidates(filter_runs(result.matches, cfg.min_consecutive));
    return result;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmtg(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

void write_timeline_csv(const std::filesystem::path& path, const IdentifyResult& result,
                        const EmbeddingStore& store,
                        const std::unordered_set<std::string>& ground_truth) {
    // Candidates in rank order, then any remaining ground-truth ids ascending.
    std::vector<std::string> row_ids;
    std::unordered_set<std::string> included;
    for (const Candidate& c : result.candidates) {
        row_ids.push_back(c.ref_id);
        included.insert(c.ref_id);
    }
    std::vector<std::string> rest;
    for (const std::string& id : ground_truth)
        if (!included.count(id)) rest.push_back(id);
    std::sort(rest.begin(), rest.end());
    row_ids.insert(row_ids.end(), rest.begin(), rest.end());

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "ref_id";
    for (double s : result.window_starts) out << ',' << fmtg(s);
    out << '\n';
    for (const std::string& id : row_ids) {
        const int col = store.track_index(id);
        if (col < 0) continue; // ground-truth id absent from the store
        out << id;
        for (Index f = 0; f < result.timeline.rows(); ++f)
            out << ',' << fmt17(result.timeline(f, col));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void write_candidates_csv(const std::filesystem::path& path,
                          const std::vector<Candidate>& candidates,
                          const std::unordered_set<std::string>* ground_truth) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "rank,ref_id,best_distance,run_length,correct\n";
    for (size_t i = 0; i < candidates.size(); ++i) {
        const Candidate& c = candidates[i];
        out << (i + 1) << ',' << c.ref_id << ',' << fmt17(c.best_distance) << ','
            << c.run_length << ',';
        if (ground_truth) out << (ground_truth->count(c.ref_id) ? 1 : 0);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace coverid
