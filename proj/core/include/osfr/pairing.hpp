#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "osfr/dataset.hpp"

namespace osfr {

/// Sample-index pair. label is 0 when both samples belong to the same
/// identity and 1 when they belong to different identities.
struct Pair {
    std::size_t a = 0;
    std::size_t b = 0;
    int label = 0;
};

enum class PairAlgorithm { p1, p2 };

struct PairSet {
    std::vector<Pair> pairs;
    int z = 0;
    PairAlgorithm algorithm = PairAlgorithm::p1;
    std::uint64_t seed = 0;
};

/// Exhaustive-over-identities pairing: every train sample is paired, z
/// times, against a random train sample of each other known identity
/// (negatives) and of its own identity (positives). Sampling is with
/// replacement, so repeated pairs and (x,x) positives can occur. Emits
/// n*2(k-1)*z pairs, half positive.
PairSet pair_p1(const ProtocolSplit& split, const FeatureStore& store, int z,
                std::uint64_t rng_seed);

/// Random-identity pairing: every train sample gets z negatives, each
/// against a random train sample of one uniformly chosen other known
/// identity, plus z positives from its own identity. Emits n*2*z pairs,
/// half positive.
PairSet pair_p2(const ProtocolSplit& split, const FeatureStore& store, int z,
                std::uint64_t rng_seed);

/// One `<a>,<b>,<label>` line per pair, for debugging and
/// cross-implementation diffing.
void write_pairs(const PairSet& set, std::ostream& out);
void write_pairs(const PairSet& set, const std::string& path);

}  // namespace osfr
