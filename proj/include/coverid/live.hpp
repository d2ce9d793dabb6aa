#ifndef COVERID_LIVE_HPP
#define COVERID_LIVE_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "coverid/salience.hpp"
#include "coverid/store.hpp"
#include "coverid/types.hpp"

namespace coverid {

struct WindowingConfig {
    double window_seconds = 180.0;
    double hop_seconds = 30.0;
    int min_consecutive = 3;
};

// Overlapping window i covers [i*hop, i*hop + window) seconds; the window
// count is floor((T - window)/hop) + 1. Throws TooShortError when the
// concert is shorter than one window.
std::vector<SalienceMatrix> window_concert(const SalienceMatrix& concert,
                                           const WindowingConfig& cfg);

struct FrameMatch {
    long frame_index;
    double start_second;
    std::string best_ref_id;
    double best_distance;
};

// Per frame, the argmin-distance reference track (ties by ascending id).
std::vector<FrameMatch> match_frames(const Matrix& frame_embeddings,
                                     const EmbeddingStore& store,
                                     double hop_seconds = 0.0);

struct CandidateRun {
    std::string ref_id;
    long first_frame;
    long run_length;
    double best_distance; // minimum over the run
};

// Maximal runs of identical best_ref_id with length >= min_consecutive.
std::vector<CandidateRun> filter_runs(const std::vector<FrameMatch>& matches,
                                      int min_consecutive);

struct Candidate {
    std::string ref_id;
    double best_distance;
    long run_length; // maximum over the ref's runs
};

// Deduplicates runs per reference and orders by ascending best distance,
// ties by descending run length, then ascending id.
std::vector<Candidate> rank_candidates(const std::vector<CandidateRun>& runs);

// Maps one concert window to an embedding row (featurization + encoder,
// composed by the caller).
using WindowEmbedder = std::function<RowVector(const SalienceMatrix&)>;

struct IdentifyResult {
    std::vector<Candidate> candidates;
    Matrix timeline; // n_windows x n_reference_tracks distances
    std::vector<FrameMatch> matches;
    std::vector<double> window_starts; // seconds
};

// window -> embed -> best-reference match -> persistence filter -> ranking.
IdentifyResult identify(const SalienceMatrix& concert, const EmbeddingStore& store,
                        const WindowEmbedder& embed_window, const WindowingConfig& cfg);

// Timeline CSV restricted to candidates plus ground truth: rows are
// reference ids, columns are the window start times.
void write_timeline_csv(const std::filesystem::path& path, const IdentifyResult& result,
                        const EmbeddingStore& store,
                        const std::unordered_set<std::string>& ground_truth);

// CSV: rank,ref_id,best_distance,run_length,correct (correct left empty
// when no ground truth is supplied).
void write_candidates_csv(const std::filesystem::path& path,
                          const std::vector<Candidate>& candidates,
                          const std::unordered_set<std::string>* ground_truth);

} // namespace coverid

#endif
