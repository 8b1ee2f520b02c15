#include "sirenpose/siren_net.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "sirenpose/errors.hpp"

namespace sirenpose {

namespace {

std::uint64_t next_revision() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

void check_arch(std::span<const std::size_t> arch) {
    if (arch.size() < 2) {
        throw ConfigError("architecture needs at least an input and an output size");
    }
    for (std::size_t n : arch) {
        if (n == 0) {
            throw ConfigError("architecture sizes must be positive");
        }
    }
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

double Rng::uniform(double a, double b) {
    // 53 random mantissa bits -> [0, 1).
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = a + (b - a) * u;
    return r < b ? r : std::nextafter(b, a);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

std::size_t Rng::below(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    k = std::min(k, n);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::Sine: return "sine";
        case ActivationKind::Tanh: return "tanh";
        case ActivationKind::Linear: return "linear";
    }
    return "linear";
}

ActivationKind activation_kind_from_string(const std::string& name) {
    if (name == "sine") return ActivationKind::Sine;
    if (name == "tanh") return ActivationKind::Tanh;
    if (name == "linear") return ActivationKind::Linear;
    throw ConfigError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)), revision_(next_revision()) {
    validate();
}

void Mlp::validate() const {
    if (layers_.empty()) {
        throw ConfigError("network has no layers");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
            throw ConfigError("layer " + std::to_string(l) + " has an empty weight matrix");
        }
        if (layer.weights.rows() != layer.biases.size()) {
            throw ConfigError("layer " + std::to_string(l) + ": weight rows != bias length");
        }
        if (layer.activation.kind == ActivationKind::Sine && !(layer.activation.omega0 > 0.0)) {
            throw ConfigError("layer " + std::to_string(l) + ": sine omega0 must be positive");
        }
        if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
            throw ConfigError("layer " + std::to_string(l) + " input does not chain with previous output");
        }
    }
}

void Mlp::bump_revision() { revision_ = next_revision(); }

DenseLayer& Mlp::mutable_layer(std::size_t l) {
    bump_revision();
    return layers_.at(l);
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.parameter_count();
    return n;
}

std::vector<std::size_t> Mlp::architecture() const {
    std::vector<std::size_t> arch;
    if (layers_.empty()) return arch;
    arch.push_back(layers_.front().in_dim());
    for (const auto& layer : layers_) arch.push_back(layer.out_dim());
    return arch;
}

void Mlp::append_params(std::vector<double>& out) const {
    for (const auto& layer : layers_) {
        out.insert(out.end(), layer.weights.data(), layer.weights.data() + layer.weights.size());
        out.insert(out.end(), layer.biases.data(), layer.biases.data() + layer.biases.size());
    }
}

void Mlp::assign_params(std::span<const double> values) {
    if (values.size() != parameter_count()) {
        throw ShapeError("expected " + std::to_string(parameter_count()) + " parameters, got " +
                         std::to_string(values.size()));
    }
    bump_revision();
    std::size_t offset = 0;
    for (auto& layer : layers_) {
        const auto nw = static_cast<std::size_t>(layer.weights.size());
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), nw, layer.weights.data());
        offset += nw;
        const auto nb = static_cast<std::size_t>(layer.biases.size());
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), nb, layer.biases.data());
        offset += nb;
    }
}

ParamGradients ParamGradients::zeros_like(const Mlp& net) {
    ParamGradients g;
    for (const auto& layer : net.layers()) {
        g.weights.push_back(WeightMatrix::Zero(layer.weights.rows(), layer.weights.cols()));
        g.biases.push_back(Vector::Zero(layer.biases.size()));
    }
    return g;
}

void ParamGradients::append(std::vector<double>& out) const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
        out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
}

Mlp init_siren(std::span<const std::size_t> arch, double omega0, Rng& rng) {
    check_arch(arch);
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
        throw ConfigError("omega0 must be positive and finite");
    }
    std::vector<DenseLayer> layers;
    const std::size_t n_layers = arch.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t fan_in = arch[l];
        const std::size_t fan_out = arch[l + 1];
        const double bound = l == 0 ? 1.0 / omega0 : std::sqrt(6.0 / static_cast<double>(fan_in));
        DenseLayer layer;
        layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                layer.weights(r, c) = rng.uniform(-bound, bound);
            }
        }
        layer.biases = Vector::Zero(static_cast<Eigen::Index>(fan_out));
        layer.activation = l + 1 == n_layers ? Activation::linear() : Activation::sine(omega0);
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

Mlp init_tanh_mlp(std::span<const std::size_t> arch, Rng& rng) {
    check_arch(arch);
    std::vector<DenseLayer> layers;
    const std::size_t n_layers = arch.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t fan_in = arch[l];
        const std::size_t fan_out = arch[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer;
        layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                layer.weights(r, c) = rng.uniform(-bound, bound);
            }
        }
        layer.biases = Vector::Zero(static_cast<Eigen::Index>(fan_out));
        layer.activation = l + 1 == n_layers ? Activation::linear() : Activation::tanh();
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

std::pair<Matrix, ForwardCache> forward(const Mlp& net, const Matrix& x) {
    if (net.num_layers() == 0) {
        throw ConfigError("forward on an empty network");
    }
    if (static_cast<std::size_t>(x.rows()) != net.in_dim()) {
        throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                         std::to_string(net.in_dim()));
    }
    if (!all_finite(x)) {
        throw NumericError("non-finite network input");
    }

    ForwardCache cache;
    cache.input = x;
    cache.revision = net.revision();
    cache.architecture = net.architecture();
    cache.pre_activations.reserve(net.num_layers());
    cache.post_activations.reserve(net.num_layers());

    const Matrix* h = &cache.input;
    for (const auto& layer : net.layers()) {
        if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
            throw NumericError("non-finite network parameter");
        }
        Matrix z = layer.weights * (*h);
        z.colwise() += layer.biases;
        Matrix out;
        switch (layer.activation.kind) {
            case ActivationKind::Sine: {
                const double w0 = layer.activation.omega0;
                out = (w0 * z.array()).sin().matrix();
                break;
            }
            case ActivationKind::Tanh: out = z.array().tanh().matrix(); break;
            case ActivationKind::Linear: out = z; break;
        }
        cache.pre_activations.push_back(std::move(z));
        cache.post_activations.push_back(std::move(out));
        h = &cache.post_activations.back();
    }
    Matrix y = cache.post_activations.back();
    return {std::move(y), std::move(cache)};
}

std::pair<Vector, ForwardCache> forward(const Mlp& net, const Vector& x) {
    auto [y, cache] = forward(net, Matrix(x));
    return {Vector(y.col(0)), std::move(cache)};
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& grad_out) {
    if (cache.revision != net.revision() || cache.architecture != net.architecture() ||
        cache.pre_activations.size() != net.num_layers()) {
        throw ContractError("forward cache does not belong to this network state");
    }
    if (static_cast<std::size_t>(grad_out.rows()) != net.out_dim() ||
        static_cast<std::size_t>(grad_out.cols()) != cache.batch_size()) {
        throw ShapeError("output gradient shape does not match network output");
    }

    BackwardResult result;
    result.params = ParamGradients::zeros_like(net);

    Matrix delta = grad_out;  // dL/dh^l
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        const DenseLayer& layer = net.layer(l);
        const Matrix& z = cache.pre_activations[l];
        switch (layer.activation.kind) {
            case ActivationKind::Sine: {
                const double w0 = layer.activation.omega0;
                delta.array() *= w0 * (w0 * z.array()).cos();
                break;
            }
            case ActivationKind::Tanh: {
                const auto& h = cache.post_activations[l];
                delta.array() *= 1.0 - h.array().square();
                break;
            }
            case ActivationKind::Linear: break;
        }
        // delta is now dL/dz^l.
        const Matrix& h_prev = l == 0 ? cache.input : cache.post_activations[l - 1];
        result.params.weights[l].noalias() = delta * h_prev.transpose();
        result.params.biases[l] = delta.rowwise().sum();
        Matrix next = layer.weights.transpose() * delta;
        delta = std::move(next);
    }
    result.grad_input = std::move(delta);
    return result;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Vector& grad_out) {
    return backward(net, cache, Matrix(grad_out));
}

}  // namespace sirenpose
