#ifndef COVERID_ENCODER_HPP
#define COVERID_ENCODER_HPP

#include <filesystem>
#include <random>
#include <vector>

#include "coverid/types.hpp"

namespace coverid {

enum class Nonlinearity { rectifier, tanh };

// Dense encoder: affine layers interleaved with the nonlinearity; the final
// layer is affine, optionally followed by per-row unit normalization.
struct EncoderSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int embed_dim = 128;
    Nonlinearity nonlinearity = Nonlinearity::rectifier;
    bool normalize_output = false;

    // [input_dim, hidden..., embed_dim]
    std::vector<int> layer_dims() const;
};

struct EncoderParams {
    std::vector<Matrix> weights; // fan_in x fan_out per layer
    std::vector<Vector> biases;  // fan_out per layer

    bool all_finite() const;
};

struct ParamGrads {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_biases;
};

// Uniform(-s, s) weights with s = sqrt(6/(fan_in+fan_out)), zero biases.
// Draw order is row-major per layer, so results are reproducible.
EncoderParams init_params(const EncoderSpec& spec, std::mt19937_64& rng);

Matrix encoder_forward(const EncoderSpec& spec, const EncoderParams& params,
                       const Matrix& features);

// Reverse-mode gradients of the forward map composed with upstream_grad.
ParamGrads encoder_backward(const EncoderSpec& spec, const EncoderParams& params,
                            const Matrix& features, const Matrix& upstream_grad);

// ENC1 container: "ENC1", u32 input_dim, u32 n_hidden, n_hidden u32 dims,
// u32 embed_dim, u32 nonlinearity, u32 normalize flag, then per layer the
// weight matrix (row-major) and bias, all f64 little-endian.
void write_enc1(const std::filesystem::path& path, const EncoderSpec& spec,
                const EncoderParams& params);
std::pair<EncoderSpec, EncoderParams> read_enc1(const std::filesystem::path& path);

} // namespace coverid

#endif
