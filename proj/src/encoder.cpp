#include "coverid/encoder.hpp"

#include <cmath>
#include <fstream>

#include "coverid/binio.hpp"
#include "coverid/errors.hpp"

namespace coverid {

std::vector<int> EncoderSpec::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(embed_dim);
    return dims;
}

bool EncoderParams::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

namespace {

void check_spec(const EncoderSpec& spec) {
    if (spec.input_dim < 1 || spec.embed_dim < 1)
        throw ShapeMismatchError("encoder dims must be positive");
    for (int h : spec.hidden_dims)
        if (h < 1) throw ShapeMismatchError("hidden dims must be positive");
}

void check_params(const EncoderSpec& spec, const EncoderParams& params) {
    const auto dims = spec.layer_dims();
    const size_t n_layers = dims.size() - 1;
    if (params.weights.size() != n_layers || params.biases.size() != n_layers)
        throw ShapeMismatchError("parameter layer count does not match spec");
    for (size_t l = 0; l < n_layers; ++l) {
        if (params.weights[l].rows() != dims[l] || params.weights[l].cols() != dims[l + 1] ||
            params.biases[l].size() != dims[l + 1])
            throw ShapeMismatchError("parameter shapes do not match spec");
    }
}

Matrix apply_nonlinearity(const Matrix& x, Nonlinearity kind) {
    if (kind == Nonlinearity::rectifier) return x.cwiseMax(0.0);
    return x.array().tanh().matrix();
}

Matrix nonlinearity_derivative(const Matrix& pre, Nonlinearity kind) {
    if (kind == Nonlinearity::rectifier)
        return (pre.array() > 0.0).cast<double>().matrix();
    return (1.0 - pre.array().tanh().square()).matrix();
}

constexpr double kNormEps = 1e-12;

} // namespace

EncoderParams init_params(const EncoderSpec& spec, std::mt19937_64& rng) {
    check_spec(spec);
    const auto dims = spec.layer_dims();
    EncoderParams params;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> u(-s, s);
        Matrix w(fan_in, fan_out);
        for (int r = 0; r < fan_in; ++r)
            for (int c = 0; c < fan_out; ++c) w(r, c) = u(rng);
        params.weights.push_back(std::move(w));
        params.biases.push_back(Vector::Zero(fan_out));
    }
    return params;
}

Matrix encoder_forward(const EncoderSpec& spec, const EncoderParams& params,
                       const Matrix& features) {
    check_params(spec, params);
    if (features.cols() != spec.input_dim)
        throw ShapeMismatchError("feature dim does not match encoder input_dim");

    Matrix h = features;
    const size_t n_layers = params.weights.size();
    for (size_t l = 0; l < n_layers; ++l) {
        Matrix pre = (h * params.weights[l]).rowwise() + params.biases[l].transpose();
        h = (l + 1 < n_layers) ? apply_nonlinearity(pre, spec.nonlinearity)
                               : std::move(pre);
    }
    if (spec.normalize_output) {
        for (Index r = 0; r < h.rows(); ++r) {
            const double n = h.row(r).norm();
            if (n >= kNormEps) h.row(r) /= n;
        }
    }
    return h;
}

ParamGrads encoder_backward(const EncoderSpec& spec, const EncoderParams& params,
                            const Matrix& features, const Matrix& upstream_grad) {
    check_params(spec, params);
    if (features.cols() != spec.input_dim)
        throw ShapeMismatchError("feature dim does not match encoder input_dim");
    if (upstream_grad.rows() != features.rows() || upstream_grad.cols() != spec.embed_dim)
        throw ShapeMismatchError("upstream gradient shape mismatch");

    const size_t n_layers = params.weights.size();
    std::vector<Matrix> activations; // inputs to each layer
    std::vector<Matrix> pres;        // pre-activations of hidden layers
    activations.reserve(n_layers);

    Matrix h = features;
    Matrix out;
    for (size_t l = 0; l < n_layers; ++l) {
        activations.push_back(h);
        Matrix pre = (h * params.weights[l]).rowwise() + params.biases[l].transpose();
        if (l + 1 < n_layers) {
            pres.push_back(pre);
            h = apply_nonlinearity(pre, spec.nonlinearity);
        } else {
            out = std::move(pre);
        }
    }

    Matrix delta = upstream_grad;
    if (spec.normalize_output) {
        // y = z / |z| per row; dL/dz = (g - (g.y) y) / |z|, pass-through when
        // |z| is below the epsilon (zero row stays zero).
        Matrix adjusted(delta.rows(), delta.cols());
        for (Index r = 0; r < out.rows(); ++r) {
            const double n = out.row(r).norm();
            if (n < kNormEps) {
                adjusted.row(r) = delta.row(r);
            } else {
                const RowVector y = out.row(r) / n;
                adjusted.row(r) = (delta.row(r) - delta.row(r).dot(y) * y) / n;
            }
        }
        delta = std::move(adjusted);
    }

    ParamGrads grads;
    grads.d_weights.resize(n_layers);
    grads.d_biases.resize(n_layers);
    for (size_t l = n_layers; l-- > 0;) {
        grads.d_weights[l] = activations[l].transpose() * delta;
        grads.d_biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix back = delta * params.weights[l].transpose();
            delta = back.cwiseProduct(nonlinearity_derivative(pres[l - 1], spec.nonlinearity));
        }
    }
    return grads;
}

void write_enc1(const std::filesystem::path& path, const EncoderSpec& spec,
                const EncoderParams& params) {
    check_params(spec, params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    binio::write_magic(out, "ENC1");
    binio::write_u32(out, static_cast<uint32_t>(spec.input_dim));
    binio::write_u32(out, static_cast<uint32_t>(spec.hidden_dims.size()));
    for (int h : spec.hidden_dims) binio::write_u32(out, static_cast<uint32_t>(h));
    binio::write_u32(out, static_cast<uint32_t>(spec.embed_dim));
    binio::write_u32(out, spec.nonlinearity == Nonlinearity::rectifier ? 0u : 1u);
    binio::write_u32(out, spec.normalize_output ? 1u : 0u);
    for (size_t l = 0; l < params.weights.size(); ++l) {
        const Matrix& w = params.weights[l];
        for (Index r = 0; r < w.rows(); ++r)
            for (Index c = 0; c < w.cols(); ++c) binio::write_f64(out, w(r, c));
        const Vector& b = params.biases[l];
        for (Index i = 0; i < b.size(); ++i) binio::write_f64(out, b(i));
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::pair<EncoderSpec, EncoderParams> read_enc1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    binio::expect_magic(in, "ENC1");

    EncoderSpec spec;
    spec.input_dim = static_cast<int>(binio::read_u32(in));
    const uint32_t n_hidden = binio::read_u32(in);
    for (uint32_t i = 0; i < n_hidden; ++i)
        spec.hidden_dims.push_back(static_cast<int>(binio::read_u32(in)));
    spec.embed_dim = static_cast<int>(binio::read_u32(in));
    spec.nonlinearity = binio::read_u32(in) == 0 ? Nonlinearity::rectifier : Nonlinearity::tanh;
    spec.normalize_output = binio::read_u32(in) != 0;
    check_spec(spec);

    EncoderParams params;
    const auto dims = spec.layer_dims();
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix w(dims[l], dims[l + 1]);
        for (Index r = 0; r < w.rows(); ++r)
            for (Index c = 0; c < w.cols(); ++c) w(r, c) = binio::read_f64(in);
        Vector b(dims[l + 1]);
        for (Index i = 0; i < b.size(); ++i) b(i) = binio::read_f64(in);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    return {spec, params};
}

} // namespace coverid
