#include "coverid/preprocess.hpp"

#include <cmath>

#include "coverid/errors.hpp"

namespace coverid {

double weighted_mean_pitch(const SalienceMatrix& m) {
    double total = 0.0;
    double weighted = 0.0;
    for (Index r = 0; r < m.frames(); ++r) {
        for (Index c = 0; c < m.bins(); ++c) {
            const double v = m.data(r, c);
            total += v;
            weighted += static_cast<double>(c) * v;
        }
    }
    if (total <= 0.0) throw ZeroSalienceError("all-zero salience matrix");
    return weighted / total;
}

SalienceMatrix trim_octaves(const SalienceMatrix& m, double center_bin, int n_octaves) {
    if (n_octaves < 1) throw ShapeMismatchError("n_octaves must be >= 1");
    const Index width = static_cast<Index>(n_octaves) * 12 * m.bins_per_semitone;
    // Ties round toward +inf.
    const Index center = static_cast<Index>(std::floor(center_bin + 0.5));
    const Index lo = center - width / 2;

    SalienceMatrix out;
    out.bins_per_semitone = m.bins_per_semitone;
    out.frames_per_second = m.frames_per_second;
    out.data = Matrix::Zero(m.frames(), width);
    const Index src_begin = std::max<Index>(0, lo);
    const Index src_end = std::min<Index>(m.bins(), lo + width);
    if (src_begin < src_end) {
        out.data.middleCols(src_begin - lo, src_end - src_begin) =
            m.data.middleCols(src_begin, src_end - src_begin);
    }
    return out;
}

SalienceMatrix downscale_frequency(const SalienceMatrix& m, int factor) {
    if (factor < 1) throw ShapeMismatchError("pool factor must be >= 1");
    if (m.bins() % factor != 0)
        throw ShapeMismatchError("bins not divisible by pool factor");
    if (m.bins_per_semitone % factor != 0)
        throw ShapeMismatchError("bins_per_semitone not divisible by pool factor");

    SalienceMatrix out;
    out.bins_per_semitone = m.bins_per_semitone / factor;
    out.frames_per_second = m.frames_per_second;
    const Index out_bins = m.bins() / factor;
    out.data.resize(m.frames(), out_bins);
    for (Index j = 0; j < out_bins; ++j) {
        out.data.col(j) = m.data.middleCols(j * static_cast<Index>(factor), factor)
                              .rowwise()
                              .mean();
    }
    return out;
}

SalienceMatrix fit_time(const SalienceMatrix& m, const PreprocessConfig& cfg) {
    if (m.frames() == 0) throw EmptyInputError("salience matrix has no frames");
    if (cfg.target_frames < 1) throw ShapeMismatchError("target_frames must be >= 1");

    // A frame is retained iff its start time lies in [0, max_seconds).
    const double limit = cfg.max_seconds * m.frames_per_second;
    const Index retained =
        std::min<Index>(m.frames(), static_cast<Index>(std::ceil(limit)));
    const Index target = cfg.target_frames;
    const Index window = (retained + target - 1) / target;

    SalienceMatrix out;
    out.bins_per_semitone = m.bins_per_semitone;
    out.frames_per_second = m.frames_per_second / static_cast<double>(window);
    out.data = Matrix::Zero(target, m.bins());
    for (Index t = 0; t < target; ++t) {
        const Index begin = t * window;
        const Index end = std::min(retained, begin + window);
        if (begin >= end) break; // trailing rows stay zero
        out.data.row(t) =
            m.data.middleRows(begin, end - begin).colwise().mean();
    }
    return out;
}

Matrix preprocess(const SalienceMatrix& m, const PreprocessConfig& cfg) {
    const double center = weighted_mean_pitch(m);
    SalienceMatrix trimmed = trim_octaves(m, center, cfg.n_octaves);
    const int factor =
        cfg.freq_pool_factor > 0 ? cfg.freq_pool_factor : m.bins_per_semitone;
    SalienceMatrix pooled = downscale_frequency(trimmed, factor);
    SalienceMatrix fitted = fit_time(pooled, cfg);
    return fitted.data;
}

Vector pitch_histogram(const std::vector<SalienceMatrix>& matrices) {
    if (matrices.empty()) return Vector();
    const Index bins = matrices.front().bins();
    const int bps = matrices.front().bins_per_semitone;
    for (const auto& m : matrices) {
        if (m.bins() != bins || m.bins_per_semitone != bps)
            throw ShapeMismatchError("pitch_histogram inputs must share bins and resolution");
    }
    const Index semitones = bins / bps;
    Vector hist = Vector::Zero(semitones);
    for (const auto& m : matrices) {
        for (Index s = 0; s < semitones; ++s)
            hist(s) += m.data.middleCols(s * bps, bps).sum();
    }
    return hist;
}

} // namespace coverid
