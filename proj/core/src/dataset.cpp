#include "osfr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "osfr/rng.hpp"
#include "text_util.hpp"

namespace osfr {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no, const std::string& what) {
    std::ostringstream msg;
    msg << path << ":" << line_no << ": " << what;
    throw std::runtime_error(msg.str());
}

}  // namespace

FeatureStore::FeatureStore(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("FeatureStore: dim must be positive");
}

void FeatureStore::add(const std::string& identity, Eigen::VectorXd vector) {
    if (identity.empty()) throw std::invalid_argument("FeatureStore: empty identity label");
    if (vector.size() != dim_)
        throw std::invalid_argument("FeatureStore: vector length " + std::to_string(vector.size()) +
                                    " does not match dim " + std::to_string(dim_));
    if (!vector.allFinite()) throw std::invalid_argument("FeatureStore: non-finite vector entry");

    const std::size_t index = vectors_.size();
    auto [it, inserted] = identity_samples_.try_emplace(identity);
    if (inserted) identity_order_.push_back(identity);
    it->second.push_back(index);
    identities_.push_back(identity);
    vectors_.push_back(std::move(vector));
}

const std::vector<std::size_t>& FeatureStore::samples_of(const std::string& identity) const {
    auto it = identity_samples_.find(identity);
    if (it == identity_samples_.end())
        throw std::invalid_argument("FeatureStore: unknown identity '" + identity + "'");
    return it->second;
}

bool FeatureStore::has_identity(const std::string& identity) const {
    return identity_samples_.count(identity) != 0;
}

FeatureStore load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature file '" + path + "'");

    FeatureStore store;
    bool header_seen = false;
    int dim = 0;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;

        if (!header_seen) {
            // Header: "dim <D>"
            std::istringstream hs{std::string(text)};
            std::string tag;
            long long d = 0;
            if (!(hs >> tag >> d) || tag != "dim" || d < 1 || (hs >> tag))
                parse_fail(path, line_no, "malformed header, expected 'dim <D>'");
            dim = static_cast<int>(d);
            store = FeatureStore(dim);
            header_seen = true;
            continue;
        }

        const std::size_t comma = text.find(',');
        if (comma == std::string_view::npos)
            parse_fail(path, line_no, "expected '<identity>,<v1>,...,<v" + std::to_string(dim) + ">'");
        const std::string identity{detail::trim(text.substr(0, comma))};
        if (identity.empty()) parse_fail(path, line_no, "empty identity label");

        Eigen::VectorXd vec(dim);
        std::string_view rest = text.substr(comma + 1);
        int count = 0;
        while (true) {
            const std::size_t next = rest.find(',');
            const std::string_view token = rest.substr(0, next);
            if (count >= dim)
                parse_fail(path, line_no, "row has more than " + std::to_string(dim) + " values");
            double value = 0.0;
            if (!detail::parse_double(token, value))
                parse_fail(path, line_no, "value " + std::to_string(count + 1) + " ('" +
                                              std::string(detail::trim(token)) + "') is not a decimal real");
            if (!std::isfinite(value))
                parse_fail(path, line_no, "value " + std::to_string(count + 1) + " is not finite");
            vec[count++] = value;
            if (next == std::string_view::npos) break;
            rest.remove_prefix(next + 1);
        }
        if (count != dim)
            parse_fail(path, line_no,
                       "row has " + std::to_string(count) + " values, expected " + std::to_string(dim));
        store.add(identity, std::move(vec));
    }

    if (!header_seen) throw std::runtime_error(path + ": missing 'dim <D>' header");
    return store;
}

void save_features(const FeatureStore& store, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write feature file '" + path + "'");
    out << "dim " << store.dim() << "\n";
    for (std::size_t i = 0; i < store.size(); ++i) {
        out << store.identity_of(i);
        const Eigen::VectorXd& v = store.vector_of(i);
        for (Eigen::Index j = 0; j < v.size(); ++j) out << "," << detail::format_double(v[j]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

FeatureStore generate_synthetic(int identities, int samples_per_identity, int dim,
                                double spread, std::uint64_t rng_seed) {
    if (identities < 1) throw std::invalid_argument("generate_synthetic: identities must be >= 1");
    if (samples_per_identity < 1)
        throw std::invalid_argument("generate_synthetic: samples_per_identity must be >= 1");
    if (dim < 1) throw std::invalid_argument("generate_synthetic: dim must be >= 1");
    if (!(spread >= 0.0)) throw std::invalid_argument("generate_synthetic: spread must be >= 0");

    Rng rng(rng_seed);
    FeatureStore store(dim);
    Eigen::VectorXd center(dim);
    for (int i = 0; i < identities; ++i) {
        char label[24];
        std::snprintf(label, sizeof(label), "id%04d", i);
        for (int j = 0; j < dim; ++j) center[j] = rng.normal();
        for (int s = 0; s < samples_per_identity; ++s) {
            Eigen::VectorXd v(dim);
            for (int j = 0; j < dim; ++j) v[j] = center[j] + spread * rng.normal();
            store.add(label, std::move(v));
        }
    }
    return store;
}

ProtocolSplit make_split(const FeatureStore& store, const SplitSpec& spec,
                         double train_fraction, std::uint64_t rng_seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("make_split: train_fraction must be in (0,1)");
    if (spec.min_samples_per_known < 1)
        throw std::invalid_argument("make_split: min_samples_per_known must be >= 1");

    const auto& all_ids = store.identities();
    const std::size_t total = all_ids.size();
    if (total == 0) throw std::invalid_argument("make_split: store has no identities");

    std::size_t known_count = 0;
    if (spec.mode == SplitMode::percentage) {
        if (!(spec.value > 0.0 && spec.value <= 1.0))
            throw std::invalid_argument("make_split: percentage value must be in (0,1]");
        // Round half up.
        known_count = static_cast<std::size_t>(std::floor(spec.value * static_cast<double>(total) + 0.5));
    } else {
        if (!(spec.value >= 1.0) || spec.value != std::floor(spec.value))
            throw std::invalid_argument("make_split: absolute value must be a positive integer");
        known_count = static_cast<std::size_t>(spec.value);
    }
    if (known_count < 1)
        throw std::invalid_argument("make_split: requested known identity count is zero");

    std::vector<std::string> eligible;
    for (const auto& id : all_ids)
        if (store.samples_of(id).size() >= static_cast<std::size_t>(spec.min_samples_per_known))
            eligible.push_back(id);
    if (eligible.size() < known_count)
        throw std::invalid_argument("make_split: not enough eligible identities: need " +
                                    std::to_string(known_count) + ", have " + std::to_string(eligible.size()) +
                                    " with >= " + std::to_string(spec.min_samples_per_known) + " samples");

    Rng rng(rng_seed);
    rng.shuffle(eligible);

    ProtocolSplit split;
    split.seed = rng_seed;
    split.known_ids.insert(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(known_count));

    for (const auto& id : all_ids) {
        if (!split.known_ids.count(id)) {
            split.unknown_ids.insert(id);
            const auto& samples = store.samples_of(id);
            split.test_unknown.insert(split.test_unknown.end(), samples.begin(), samples.end());
            continue;
        }
        std::vector<std::size_t> samples = store.samples_of(id);
        if (samples.size() < 2)
            throw std::invalid_argument("make_split: known identity '" + id +
                                        "' has a single sample; cannot keep both train and test nonempty");
        rng.shuffle(samples);
        const auto n = samples.size();
        auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        split.train.insert(split.train.end(), samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test_known.insert(split.test_known.end(), samples.begin() + static_cast<std::ptrdiff_t>(n_train), samples.end());
    }
    return split;
}

}  // namespace osfr
