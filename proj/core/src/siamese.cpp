#include "osfr/siamese.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "osfr/rng.hpp"

namespace osfr {

namespace {

void check_input(const SiameseNet& net, const Eigen::VectorXd& x, const char* where) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument(std::string(where) + ": input length " + std::to_string(x.size()) +
                                    " does not match net input dim " + std::to_string(net.input_dim()));
}

void check_net(const SiameseNet& net) {
    if (net.layer_dims.size() < 2 || net.weights.size() != net.layer_dims.size() - 1 ||
        net.biases.size() != net.weights.size() || net.activations.size() != net.weights.size())
        throw std::invalid_argument("SiameseNet: inconsistent layer structure");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (net.weights[l].rows() != net.layer_dims[l + 1] || net.weights[l].cols() != net.layer_dims[l] ||
            net.biases[l].size() != net.layer_dims[l + 1])
            throw std::invalid_argument("SiameseNet: layer " + std::to_string(l) + " has incompatible shape");
    }
}

Eigen::VectorXd apply_activation(Activation act, Eigen::VectorXd z) {
    switch (act) {
        case Activation::relu: return z.cwiseMax(0.0);
        case Activation::identity: return z;
    }
    throw std::invalid_argument("unknown activation tag");
}

struct ForwardTrace {
    std::vector<Eigen::VectorXd> activations;      // a_0 = x .. a_L = embedding
    std::vector<Eigen::VectorXd> pre_activations;  // z_1 .. z_L
};

ForwardTrace forward_trace(const SiameseNet& net, const Eigen::VectorXd& x) {
    ForwardTrace trace;
    trace.activations.reserve(net.layer_count() + 1);
    trace.pre_activations.reserve(net.layer_count());
    trace.activations.push_back(x);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        Eigen::VectorXd z = net.weights[l] * trace.activations.back() + net.biases[l];
        trace.pre_activations.push_back(z);
        trace.activations.push_back(apply_activation(net.activations[l], std::move(z)));
    }
    return trace;
}

/// d(act)/dz as a factor applied to an incoming delta, in place.
void apply_activation_grad(Activation act, const Eigen::VectorXd& z, Eigen::VectorXd& delta) {
    if (act == Activation::relu)
        for (Eigen::Index i = 0; i < z.size(); ++i)
            if (z[i] <= 0.0) delta[i] = 0.0;
}

/// Backpropagates one branch's output gradient into the shared
/// accumulator.
void backprop_branch(const SiameseNet& net, const ForwardTrace& trace,
                     Eigen::VectorXd delta, NetGradients& acc) {
    for (std::size_t l = net.layer_count(); l-- > 0;) {
        apply_activation_grad(net.activations[l], trace.pre_activations[l], delta);
        acc.weights[l].noalias() += delta * trace.activations[l].transpose();
        acc.biases[l] += delta;
        if (l > 0) delta = net.weights[l].transpose() * delta;
    }
}

}  // namespace

std::size_t SiameseNet::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<std::size_t>(weights[l].size()) + static_cast<std::size_t>(biases[l].size());
    return n;
}

NetGradients NetGradients::zeros_like(const SiameseNet& net) {
    NetGradients g;
    g.weights.reserve(net.weights.size());
    g.biases.reserve(net.biases.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
    return g;
}

void NetGradients::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

SiameseNet init_net(const std::vector<int>& layer_dims, std::uint64_t rng_seed) {
    if (layer_dims.size() < 2) throw std::invalid_argument("init_net: need at least input and output dims");
    for (int d : layer_dims)
        if (d < 1) throw std::invalid_argument("init_net: all layer dims must be positive");

    Rng rng(rng_seed);
    SiameseNet net;
    net.layer_dims = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = (2.0 * rng.next_double() - 1.0) * limit;
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
        net.activations.push_back(l + 2 < layer_dims.size() ? Activation::relu : Activation::identity);
    }
    return net;
}

Eigen::VectorXd forward(const SiameseNet& net, const Eigen::VectorXd& x) {
    check_net(net);
    check_input(net, x, "forward");
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < net.layer_count(); ++l)
        a = apply_activation(net.activations[l], net.weights[l] * a + net.biases[l]);
    return a;
}

double distance(const SiameseNet& net, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
    return (forward(net, x1) - forward(net, x2)).norm();
}

double contrastive_loss(double d, int y, double margin) {
    if (y != 0 && y != 1) throw std::invalid_argument("contrastive_loss: y must be 0 or 1");
    if (!(margin > 0.0)) throw std::invalid_argument("contrastive_loss: margin must be > 0");
    if (!(d >= 0.0)) throw std::invalid_argument("contrastive_loss: distance must be >= 0");
    const double hinge = std::max(0.0, margin - d);
    return ((1.0 - y) * d * d + y * hinge * hinge) / 2.0;
}

double backward_accumulate(const SiameseNet& net, const Eigen::VectorXd& x1,
                           const Eigen::VectorXd& x2, int y, double margin,
                           NetGradients& acc) {
    check_net(net);
    check_input(net, x1, "backward");
    check_input(net, x2, "backward");
    if (acc.weights.size() != net.layer_count())
        throw std::invalid_argument("backward: gradient accumulator does not match net");

    const ForwardTrace trace1 = forward_trace(net, x1);
    const ForwardTrace trace2 = forward_trace(net, x2);
    const Eigen::VectorXd diff = trace1.activations.back() - trace2.activations.back();
    const double d = diff.norm();
    const double loss = contrastive_loss(d, y, margin);

    // dL/d(diff). Positive pairs: diff itself (smooth, vanishes at d=0).
    // Negative pairs: -(margin-d)/d * diff inside the margin, zero on the
    // flat hinge region and at d=0 (zero subgradient).
    Eigen::VectorXd grad_diff;
    if (y == 0) {
        if (d == 0.0) return loss;
        grad_diff = diff;
    } else {
        if (d >= margin || d == 0.0) return loss;
        grad_diff = ((d - margin) / d) * diff;
    }

    // Shared parameters: the gradient is the sum of both branch
    // contributions.
    backprop_branch(net, trace1, grad_diff, acc);
    backprop_branch(net, trace2, -grad_diff, acc);
    return loss;
}

std::pair<double, NetGradients> backward(const SiameseNet& net, const Eigen::VectorXd& x1,
                                         const Eigen::VectorXd& x2, int y, double margin) {
    NetGradients acc = NetGradients::zeros_like(net);
    const double loss = backward_accumulate(net, x1, x2, y, margin, acc);
    return {loss, std::move(acc)};
}

std::pair<SiameseNet, TrainHistory> train(SiameseNet net, const PairSet& pairs,
                                          const FeatureStore& store, const TrainConfig& cfg) {
    check_net(net);
    if (pairs.pairs.empty()) throw std::invalid_argument("train: empty pair set");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("train: learning_rate must be >= 0");
    if (store.dim() != net.input_dim())
        throw std::invalid_argument("train: store dim " + std::to_string(store.dim()) +
                                    " does not match net input dim " + std::to_string(net.input_dim()));
    for (const Pair& p : pairs.pairs)
        if (p.a >= store.size() || p.b >= store.size())
            throw std::invalid_argument("train: pair index out of range");

    Rng rng(cfg.rng_seed);
    std::vector<std::size_t> order(pairs.pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory history;
    history.epoch_mean_loss.reserve(static_cast<std::size_t>(cfg.epochs));
    NetGradients grad = NetGradients::zeros_like(net);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            grad.set_zero();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const Pair& p = pairs.pairs[order[i]];
                batch_loss += backward_accumulate(net, store.vector_of(p.a), store.vector_of(p.b),
                                                  p.label, cfg.margin, grad);
            }
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << ", batch starting at pair " << start
                    << " (learning rate too high or degenerate data)";
                throw std::runtime_error(msg.str());
            }
            epoch_loss += batch_loss;
            const double step = cfg.learning_rate / static_cast<double>(end - start);
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                net.weights[l].noalias() -= step * grad.weights[l];
                net.biases[l].noalias() -= step * grad.biases[l];
            }
        }
        history.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return {std::move(net), std::move(history)};
}

namespace {

constexpr char kModelMagic[8] = {'O', 'S', 'F', 'R', 'N', 'E', 'T', '\n'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw std::runtime_error("truncated model file '" + path + "'");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8))
        throw std::runtime_error("truncated model file '" + path + "'");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in, const std::string& path) {
    return std::bit_cast<double>(get_u64(in, path));
}

}  // namespace

void save_net(const SiameseNet& net, const std::string& path) {
    check_net(net);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");

    out.write(kModelMagic, sizeof(kModelMagic));
    put_u32(out, kModelVersion);
    put_u32(out, static_cast<std::uint32_t>(net.layer_count()));
    for (int d : net.layer_dims) put_u64(out, static_cast<std::uint64_t>(d));
    for (Activation a : net.activations) out.put(static_cast<char>(a));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Eigen::MatrixXd& w = net.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) put_f64(out, net.biases[l][i]);
    }
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

SiameseNet load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");

    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw std::runtime_error("'" + path + "' is not a model file (bad magic)");
    const std::uint32_t version = get_u32(in, path);
    if (version != kModelVersion)
        throw std::runtime_error("model file '" + path + "' has unsupported format version " +
                                 std::to_string(version));
    const std::uint32_t layers = get_u32(in, path);
    if (layers < 1 || layers > 1024)
        throw std::runtime_error("corrupt model file '" + path + "': implausible layer count");

    SiameseNet net;
    for (std::uint32_t i = 0; i <= layers; ++i) {
        const std::uint64_t d = get_u64(in, path);
        if (d < 1 || d > (1ull << 24))
            throw std::runtime_error("corrupt model file '" + path + "': implausible layer dim");
        net.layer_dims.push_back(static_cast<int>(d));
    }
    for (std::uint32_t l = 0; l < layers; ++l) {
        const int tag = in.get();
        if (tag == std::char_traits<char>::eof())
            throw std::runtime_error("truncated model file '" + path + "'");
        if (tag != static_cast<int>(Activation::relu) && tag != static_cast<int>(Activation::identity))
            throw std::runtime_error("corrupt model file '" + path + "': unknown activation tag");
        net.activations.push_back(static_cast<Activation>(tag));
    }
    for (std::uint32_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd w(net.layer_dims[l + 1], net.layer_dims[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_f64(in, path);
        net.weights.push_back(std::move(w));
        Eigen::VectorXd b(net.layer_dims[l + 1]);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = get_f64(in, path);
        net.biases.push_back(std::move(b));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("corrupt model file '" + path + "': trailing bytes");
    check_net(net);
    return net;
}

}  // namespace osfr
