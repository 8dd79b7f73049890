#include "osfr/pairing.hpp"

#include <fstream>
#include <iostream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "osfr/rng.hpp"

namespace osfr {

namespace {

struct TrainGroups {
    std::vector<std::string> ids;                                   // known ids, store order
    std::unordered_map<std::string, std::vector<std::size_t>> samples;  // train samples per id
};

TrainGroups group_train_samples(const ProtocolSplit& split, const FeatureStore& store) {
    TrainGroups groups;
    for (const auto& id : store.identities())
        if (split.known_ids.count(id)) groups.ids.push_back(id);
    for (std::size_t index : split.train) {
        if (index >= store.size())
            throw std::invalid_argument("pairing: train index " + std::to_string(index) +
                                        " out of range for store of size " + std::to_string(store.size()));
        groups.samples[store.identity_of(index)].push_back(index);
    }
    for (const auto& id : groups.ids) {
        auto it = groups.samples.find(id);
        if (it == groups.samples.end() || it->second.empty())
            throw std::invalid_argument("pairing: known identity '" + id + "' has no train samples");
        if (it->second.size() == 1)
            std::cerr << "warning: identity '" << id
                      << "' has a single train sample; its positive pairs collapse to (x,x)\n";
    }
    return groups;
}

std::size_t rand_sample(Rng& rng, const std::vector<std::size_t>& candidates) {
    return candidates[rng.next_below(candidates.size())];
}

void check_preconditions(const TrainGroups& groups, int z) {
    if (z < 0) throw std::invalid_argument("pairing: z must be >= 0");
    if (groups.ids.size() < 2)
        throw std::invalid_argument("pairing: at least 2 known identities required, have " +
                                    std::to_string(groups.ids.size()));
}

}  // namespace

PairSet pair_p1(const ProtocolSplit& split, const FeatureStore& store, int z,
                std::uint64_t rng_seed) {
    const TrainGroups groups = group_train_samples(split, store);
    check_preconditions(groups, z);

    Rng rng(rng_seed);
    PairSet set;
    set.z = z;
    set.algorithm = PairAlgorithm::p1;
    set.seed = rng_seed;
    set.pairs.reserve(split.train.size() * 2 * (groups.ids.size() - 1) * static_cast<std::size_t>(z));

    for (std::size_t x : split.train) {
        const auto& own = groups.samples.at(store.identity_of(x));
        for (const auto& other_id : groups.ids) {
            if (other_id == store.identity_of(x)) continue;
            const auto& theirs = groups.samples.at(other_id);
            for (int c = 0; c < z; ++c) {
                set.pairs.push_back({x, rand_sample(rng, theirs), 1});
                set.pairs.push_back({x, rand_sample(rng, own), 0});
            }
        }
    }
    return set;
}

PairSet pair_p2(const ProtocolSplit& split, const FeatureStore& store, int z,
                std::uint64_t rng_seed) {
    const TrainGroups groups = group_train_samples(split, store);
    check_preconditions(groups, z);

    Rng rng(rng_seed);
    PairSet set;
    set.z = z;
    set.algorithm = PairAlgorithm::p2;
    set.seed = rng_seed;
    set.pairs.reserve(split.train.size() * 2 * static_cast<std::size_t>(z));

    // Other-identity list per identity, so the uniform identity draw is a
    // single next_below call.
    std::unordered_map<std::string, std::vector<const std::vector<std::size_t>*>> others;
    for (const auto& id : groups.ids) {
        auto& list = others[id];
        for (const auto& other_id : groups.ids)
            if (other_id != id) list.push_back(&groups.samples.at(other_id));
    }

    for (std::size_t x : split.train) {
        const std::string& id = store.identity_of(x);
        const auto& own = groups.samples.at(id);
        const auto& other_lists = others.at(id);
        for (int c = 0; c < z; ++c) {
            const auto& theirs = *other_lists[rng.next_below(other_lists.size())];
            set.pairs.push_back({x, rand_sample(rng, theirs), 1});
            set.pairs.push_back({x, rand_sample(rng, own), 0});
        }
    }
    return set;
}

void write_pairs(const PairSet& set, std::ostream& out) {
    for (const Pair& p : set.pairs) out << p.a << "," << p.b << "," << p.label << "\n";
}

void write_pairs(const PairSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pair file '" + path + "'");
    write_pairs(set, out);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace osfr
