#include "coverid/salience.hpp"

#include <cmath>
#include <fstream>

#include "coverid/binio.hpp"
#include "coverid/errors.hpp"

namespace coverid {

void validate(const SalienceMatrix& m) {
    if (m.bins_per_semitone <= 0)
        throw ShapeMismatchError("bins_per_semitone must be positive");
    if (m.frames_per_second <= 0.0)
        throw ShapeMismatchError("frames_per_second must be positive");
    if (m.bins() % m.bins_per_semitone != 0)
        throw ShapeMismatchError("bins not a multiple of bins_per_semitone");
    if (!m.data.allFinite() || (m.data.array() < 0.0).any())
        throw ShapeMismatchError("salience values must be finite and >= 0");
}

void write_sal1(const std::filesystem::path& path, const SalienceMatrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    binio::write_magic(out, "SAL1");
    binio::write_u32(out, static_cast<uint32_t>(m.frames()));
    binio::write_u32(out, static_cast<uint32_t>(m.bins()));
    binio::write_u16(out, static_cast<uint16_t>(m.bins_per_semitone));
    binio::write_f32(out, static_cast<float>(m.frames_per_second));
    for (Index r = 0; r < m.frames(); ++r)
        for (Index c = 0; c < m.bins(); ++c)
            binio::write_f32(out, static_cast<float>(m.data(r, c)));
    if (!out) throw IoError("write failed: " + path.string());
}

SalienceMatrix read_sal1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    binio::expect_magic(in, "SAL1");
    const uint32_t frames = binio::read_u32(in);
    const uint32_t bins = binio::read_u32(in);
    const uint16_t bps = binio::read_u16(in);
    const float fps = binio::read_f32(in);
    if (bps == 0) throw ParseError("bins_per_semitone must be positive: " + path.string());
    if (bins % bps != 0)
        throw ParseError("bins not a multiple of bins_per_semitone: " + path.string());

    SalienceMatrix m;
    m.bins_per_semitone = bps;
    m.frames_per_second = fps;
    m.data.resize(frames, bins);
    for (uint32_t r = 0; r < frames; ++r)
        for (uint32_t c = 0; c < bins; ++c)
            m.data(r, c) = binio::read_f32(in);
    return m;
}

} // namespace coverid
