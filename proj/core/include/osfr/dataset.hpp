#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace osfr {

/// Labeled feature vectors grouped by identity. Samples keep insertion
/// order; identities keep first-appearance order. Immutable once filled,
/// safe to share across threads for reading.
class FeatureStore {
public:
    FeatureStore() = default;
    explicit FeatureStore(int dim);

    int dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    std::size_t identity_count() const { return identity_order_.size(); }

    /// Appends a sample. Throws if the vector length does not match dim
    /// or any entry is non-finite.
    void add(const std::string& identity, Eigen::VectorXd vector);

    const Eigen::VectorXd& vector_of(std::size_t sample) const { return vectors_.at(sample); }
    const std::string& identity_of(std::size_t sample) const { return identities_.at(sample); }

    /// Identity labels in first-appearance order.
    const std::vector<std::string>& identities() const { return identity_order_; }
    const std::vector<std::size_t>& samples_of(const std::string& identity) const;
    bool has_identity(const std::string& identity) const;

private:
    int dim_ = 0;
    std::vector<std::string> identities_;
    std::vector<Eigen::VectorXd> vectors_;
    std::vector<std::string> identity_order_;
    std::unordered_map<std::string, std::vector<std::size_t>> identity_samples_;
};

enum class SplitMode { percentage, absolute };

/// How many identities become the gallery: a fraction of all identities
/// (percentage mode, value in (0,1]) or an exact count (absolute mode).
struct SplitSpec {
    SplitMode mode = SplitMode::percentage;
    double value = 0.5;
    int min_samples_per_known = 2;
};

/// Known/unknown identity partition plus per-identity train/test sample
/// split. Produced by make_split; immutable afterwards.
struct ProtocolSplit {
    std::set<std::string> known_ids;
    std::set<std::string> unknown_ids;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test_known;
    std::vector<std::size_t> test_unknown;
    std::uint64_t seed = 0;
};

/// Parses the text feature-file format:
///   line 1:            dim <D>
///   following lines:   <identity>,<v1>,...,<vD>
/// '#'-prefixed lines and blank lines are ignored. Malformed input is
/// reported with its line number.
FeatureStore load_features(const std::string& path);

/// Writes the text feature-file format. Values are printed with 17
/// significant digits so that a reload reproduces every double exactly.
void save_features(const FeatureStore& store, const std::string& path);

/// Draws `identities` isotropic Gaussian clusters in `dim` dimensions:
/// per-identity centers are standard normal, samples are center plus
/// N(0, spread^2) noise. Deterministic given rng_seed.
FeatureStore generate_synthetic(int identities, int samples_per_identity, int dim,
                                double spread, std::uint64_t rng_seed);

/// Picks known identities uniformly among those with at least
/// spec.min_samples_per_known samples, then splits each known identity's
/// samples into train/test by train_fraction (train gets
/// floor(n*train_fraction), both sides kept nonempty). Every sample of a
/// non-known identity lands in test_unknown. Percentage-mode identity
/// counts round half up. Deterministic given rng_seed.
ProtocolSplit make_split(const FeatureStore& store, const SplitSpec& spec,
                         double train_fraction, std::uint64_t rng_seed);

}  // namespace osfr
