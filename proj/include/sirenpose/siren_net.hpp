#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sirenpose {

using Vector = Eigen::VectorXd;
// Activations and gradients are stored feature-major: one column per sample.
using Matrix = Eigen::MatrixXd;
using WeightMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDefaultOmega0 = 30.0;

// Seeded 64-bit generator. Every stochastic step in the library draws from one
// of these so that runs are reproducible from a single integer.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Sample in [a, b). Requires a < b.
    double uniform(double a, double b);

    double normal(double mean, double stddev);

    // Integer in [0, n). Requires n > 0.
    std::size_t below(std::size_t n);

    // k distinct indices from [0, n), returned in ascending order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

enum class ActivationKind { Sine, Tanh, Linear };

struct Activation {
    ActivationKind kind = ActivationKind::Linear;
    double omega0 = 0.0;  // only meaningful for Sine

    static Activation sine(double omega0) { return {ActivationKind::Sine, omega0}; }
    static Activation tanh() { return {ActivationKind::Tanh, 0.0}; }
    static Activation linear() { return {ActivationKind::Linear, 0.0}; }

    bool operator==(const Activation&) const = default;
};

std::string to_string(ActivationKind kind);
ActivationKind activation_kind_from_string(const std::string& name);

struct DenseLayer {
    WeightMatrix weights;  // out_dim x in_dim
    Vector biases;         // out_dim
    Activation activation;

    std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t parameter_count() const { return out_dim() * in_dim() + out_dim(); }
};

// Multilayer perceptron with per-layer activations. A SIREN is the special case
// with Sine hidden layers and a Linear output layer (see init_siren); the
// low-frequency branch of the predictor reuses the same type with Tanh.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    const std::vector<DenseLayer>& layers() const { return layers_; }
    const DenseLayer& layer(std::size_t l) const { return layers_.at(l); }

    // Mutable access invalidates every ForwardCache taken before the call.
    DenseLayer& mutable_layer(std::size_t l);

    std::size_t num_layers() const { return layers_.size(); }
    std::size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
    std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
    std::size_t parameter_count() const;

    // Layer sizes, e.g. {1, 16, 16, 4}.
    std::vector<std::size_t> architecture() const;

    // Appends parameters in layer order: weights row-major, then biases.
    void append_params(std::vector<double>& out) const;
    // Reads parameter_count() values in the append_params order.
    void assign_params(std::span<const double> values);

    std::uint64_t revision() const { return revision_; }

private:
    void validate() const;
    void bump_revision();

    std::vector<DenseLayer> layers_;
    std::uint64_t revision_ = 0;
};

// Per-layer state retained by forward() for backward().
struct ForwardCache {
    Matrix input;                        // h^0, in_dim x batch
    std::vector<Matrix> pre_activations;  // z^l = W^l h^{l-1} + b^l
    std::vector<Matrix> post_activations; // h^l = act(z^l)
    std::uint64_t revision = 0;
    std::vector<std::size_t> architecture;

    std::size_t batch_size() const { return static_cast<std::size_t>(input.cols()); }
};

struct ParamGradients {
    std::vector<WeightMatrix> weights;
    std::vector<Vector> biases;

    static ParamGradients zeros_like(const Mlp& net);
    void append(std::vector<double>& out) const;
};

struct BackwardResult {
    ParamGradients params;  // summed over the batch
    Matrix grad_input;      // in_dim x batch
};

// First layer W ~ U(-1/omega0, 1/omega0); deeper layers W ~ U(-sqrt(6/n), sqrt(6/n))
// with n the layer's input dimension. Biases start at zero. Hidden layers are
// Sine(omega0), the output layer is Linear.
Mlp init_siren(std::span<const std::size_t> arch, double omega0, Rng& rng);

// Tanh hidden layers, Linear output, Glorot-uniform weights, zero biases.
Mlp init_tanh_mlp(std::span<const std::size_t> arch, Rng& rng);

// Batched forward pass; column j of x is sample j.
std::pair<Matrix, ForwardCache> forward(const Mlp& net, const Matrix& x);
std::pair<Vector, ForwardCache> forward(const Mlp& net, const Vector& x);

// grad_out has one column per cached sample. Parameter gradients are summed
// over the batch.
BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& grad_out);
BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Vector& grad_out);

}  // namespace sirenpose
