#ifndef COVERID_PREPROCESS_HPP
#define COVERID_PREPROCESS_HPP

#include <vector>

#include "coverid/salience.hpp"
#include "coverid/types.hpp"

namespace coverid {

struct PreprocessConfig {
    int n_octaves = 5;          // 5 for multi-pitch, 3 for dominant melody
    int target_frames = 1024;
    double max_seconds = 180.0;
    int freq_pool_factor = 0;   // 0 = use the input's bins_per_semitone
};

// Salience-weighted mean bin index over all cells. Throws ZeroSalienceError
// on an all-zero matrix (upstream extraction failure).
double weighted_mean_pitch(const SalienceMatrix& m);

// Cuts a window of n_octaves*12*bins_per_semitone bins centered on
// round(center_bin) (ties toward +inf). Output column j maps to input column
// round(center_bin) - width/2 + j; columns outside the input are zero.
SalienceMatrix trim_octaves(const SalienceMatrix& m, double center_bin, int n_octaves);

// Mean-pools the frequency axis by an integer factor. Output bin j is the
// arithmetic mean of input bins [j*factor, (j+1)*factor).
SalienceMatrix downscale_frequency(const SalienceMatrix& m, int factor);

// Keeps frames starting within the first max_seconds, then mean-pools
// (window = ceil(retained/target_frames)) or zero-pads the time axis to
// exactly target_frames rows.
SalienceMatrix fit_time(const SalienceMatrix& m, const PreprocessConfig& cfg);

// fit_time . downscale_frequency . trim_octaves(center = weighted_mean_pitch).
// Result shape is (target_frames, n_octaves*12); (1024, 60) at defaults.
Matrix preprocess(const SalienceMatrix& m, const PreprocessConfig& cfg);

// Total salience per semitone accumulated over all matrices. All inputs must
// share bins and bins_per_semitone.
Vector pitch_histogram(const std::vector<SalienceMatrix>& matrices);

} // namespace coverid

#endif
