#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "osfr/dataset.hpp"
#include "osfr/pairing.hpp"

namespace osfr {

enum class Activation : std::uint8_t { relu = 0, identity = 1 };

/// Fully connected mapping shared by both branches of the siamese pair.
/// layer_dims = [input, hidden..., output]; weights[l] has shape
/// (layer_dims[l+1] x layer_dims[l]). Weight sharing is structural: there
/// is a single parameter set and both branches evaluate it.
struct SiameseNet {
    std::vector<int> layer_dims;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    std::vector<Activation> activations;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t parameter_count() const;
};

/// Default architecture: 2622-dimensional input, three fully connected
/// layers of 2048 units.
inline const std::vector<int> kDefaultLayerDims = {2622, 2048, 2048, 2048};

struct TrainConfig {
    double margin = 1.0;
    double learning_rate = 0.01;
    int epochs = 50;
    int batch_size = 32;
    std::uint64_t rng_seed = 0;
};

struct TrainHistory {
    std::vector<double> epoch_mean_loss;
};

/// Parameter-shaped gradient accumulator.
struct NetGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static NetGradients zeros_like(const SiameseNet& net);
    void set_zero();
};

/// Scaled-uniform initialization: W ~ U(-a, a) with
/// a = sqrt(6 / (fan_in + fan_out)), biases zero. Hidden layers get the
/// rectifier activation, the output layer is linear. Deterministic given
/// rng_seed.
SiameseNet init_net(const std::vector<int>& layer_dims, std::uint64_t rng_seed);

/// Embedding of one input through the shared mapping.
Eigen::VectorXd forward(const SiameseNet& net, const Eigen::VectorXd& x);

/// Euclidean distance between the two branch embeddings.
double distance(const SiameseNet& net, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2);

/// Pairwise loss ((1-y)*d^2 + y*max(0, margin-d)^2) / 2 with y = 0 for
/// same-identity pairs and y = 1 for different-identity pairs.
double contrastive_loss(double d, int y, double margin);

/// Adds both branches' gradient contributions for one pair into acc and
/// returns the pair loss. At d = 0 the distance-dependent terms use the
/// zero subgradient.
double backward_accumulate(const SiameseNet& net, const Eigen::VectorXd& x1,
                           const Eigen::VectorXd& x2, int y, double margin,
                           NetGradients& acc);

/// Loss plus freshly allocated gradients for one pair.
std::pair<double, NetGradients> backward(const SiameseNet& net, const Eigen::VectorXd& x1,
                                         const Eigen::VectorXd& x2, int y, double margin);

/// Minibatch gradient descent: each epoch shuffles the pairs (seeded),
/// walks batches of cfg.batch_size (last batch may be short) and steps
/// with the mean batch gradient. History records the mean loss of each
/// epoch. Deterministic given cfg.rng_seed and the initial net.
std::pair<SiameseNet, TrainHistory> train(SiameseNet net, const PairSet& pairs,
                                          const FeatureStore& store, const TrainConfig& cfg);

/// Binary model format: magic, format version, layer dims, activation
/// tags, then parameters as little-endian 64-bit reals. Round-trips
/// bit-exactly.
void save_net(const SiameseNet& net, const std::string& path);
SiameseNet load_net(const std::string& path);

}  // namespace osfr
