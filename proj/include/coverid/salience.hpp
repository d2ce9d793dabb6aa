#ifndef COVERID_SALIENCE_HPP
#define COVERID_SALIENCE_HPP

#include <filesystem>

#include "coverid/types.hpp"

namespace coverid {

// Time x pitch salience map. Rows are time frames, columns are pitch bins at
// bins_per_semitone resolution. Values are nonnegative salience energies.
struct SalienceMatrix {
    Matrix data;                    // frames x bins
    int bins_per_semitone = 5;
    double frames_per_second = 28.44;

    Index frames() const { return data.rows(); }
    Index bins() const { return data.cols(); }
};

// Throws if data has negative or non-finite values, or bins is not a
// multiple of bins_per_semitone.
void validate(const SalienceMatrix& m);

// SAL1 container: "SAL1", u32 frames, u32 bins, u16 bins_per_semitone,
// f32 frames_per_second, then frames*bins f32 values, row-major (time-major),
// all little-endian.
void write_sal1(const std::filesystem::path& path, const SalienceMatrix& m);
SalienceMatrix read_sal1(const std::filesystem::path& path);

} // namespace coverid

#endif
