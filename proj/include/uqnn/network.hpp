#pragma once

#include <cstdint>
#include <string>

#include "uqnn/linalg.hpp"
#include "uqnn/operators.hpp"

namespace uqnn {

enum class Arch { Mlp, Resnet };

const char* to_string(Arch arch);
Arch parse_arch(const std::string& s);

inline double leaky_relu(double x, double alpha) { return x >= 0.0 ? x : alpha * x; }

/// Slope of the leaky ReLU; the kink at 0 takes the positive branch,
/// matching the Heaviside convention H(0) = 1.
inline double leaky_relu_prime(double x, double alpha) { return x >= 0.0 ? 1.0 : alpha; }

struct DenseLayer {
    Matrix weights; // N x N_x for layer 1, N x N afterwards
    Vector bias;    // length N

    bool operator==(const DenseLayer&) const = default;
};

/// Deterministic leaky-ReLU feed-forward map. The output layer is the
/// linear matrix A; a resnet additionally adds the input back, which
/// requires n_y == n_x.
struct FeedForwardNet {
    std::vector<DenseLayer> layers;
    Matrix output_matrix; // N_y x N
    double alpha = 0.01;
    Arch arch = Arch::Mlp;

    std::size_t depth() const { return layers.size(); }
    std::size_t n_x() const { return layers.front().weights.cols(); }
    std::size_t n_y() const { return output_matrix.rows(); }
    std::size_t width() const { return layers.front().weights.rows(); }

    void validate() const; // throws ValidationError / DimensionError
    bool operator==(const FeedForwardNet&) const = default;
};

struct ForwardTrace {
    std::vector<Vector> preactivations; // h_n per layer
    std::vector<Vector> activations;    // r_n = phi(h_n)
    Vector output;
};

Vector forward(const FeedForwardNet& net, const Vector& f);
ForwardTrace forward_trace(const FeedForwardNet& net, const Vector& f);

/// He-style uniform initialization, deterministic in the seed.
FeedForwardNet init_net(std::size_t n_x, std::size_t n_y, std::size_t width, std::size_t depth,
                        double alpha, Arch arch, std::uint64_t seed);

struct TrainConfig {
    std::size_t layers = 3;
    std::size_t width = 32;
    std::size_t epochs = 100;
    std::size_t batch = 256;
    double learning_rate = 3e-3;
    double lr_decay = 1.0; // per-epoch multiplier on the learning rate
    double alpha = 0.01;
    Arch arch = Arch::Mlp;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
};

struct TrainResult {
    FeedForwardNet net;
    Vector epoch_loss;      // training MSE per epoch
    double validation_rmse; // relative RMSE on the held-out split
};

/// Minimize mean squared error with ADAM. Deterministic in the config
/// seed regardless of thread count. Throws TrainingError on NaN loss.
TrainResult train_adam(const Dataset& data, const TrainConfig& config);

// Gradient of the batch MSE, flattened in parameter order. The OpenMP
// version chunks the batch and merges chunk sums in index order, so it is
// bit-identical to the serial reference.
Vector batch_gradient(const FeedForwardNet& net, const Dataset& data,
                      const std::vector<std::size_t>& batch_indices);
Vector batch_gradient_serial(const FeedForwardNet& net, const Dataset& data,
                             const std::vector<std::size_t>& batch_indices);

/// Weight file: JSON with decimal doubles that round-trip bit-exactly.
void save_network(const FeedForwardNet& net, const std::string& path,
                  const std::string& metadata_json = "{}");
FeedForwardNet load_network(const std::string& path);

/// Fingerprint of the serialized weights, for stamping derived artifacts.
std::string network_fingerprint(const FeedForwardNet& net);

} // namespace uqnn
