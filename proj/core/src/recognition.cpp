#include "osfr/recognition.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace osfr {

GalleryIndex build_gallery(const SiameseNet& net, const ProtocolSplit& split,
                           const FeatureStore& store) {
    if (split.train.empty()) throw std::invalid_argument("build_gallery: split has no train samples");
    GalleryIndex index;
    index.entries.reserve(split.train.size());
    for (std::size_t sample : split.train) {
        if (sample >= store.size())
            throw std::invalid_argument("build_gallery: train index out of range");
        index.entries.push_back({store.identity_of(sample), sample, forward(net, store.vector_of(sample))});
    }
    return index;
}

ProbeScore score_probe(const GalleryIndex& index, const SiameseNet& net,
                       const Eigen::VectorXd& probe) {
    if (index.entries.empty()) throw std::invalid_argument("score_probe: empty gallery");
    const Eigen::VectorXd embedding = forward(net, probe);

    ProbeScore best;
    best.score = std::numeric_limits<double>::infinity();
    for (const GalleryEntry& entry : index.entries) {
        const double dist = (embedding - entry.embedding).norm();
        if (dist < best.score) {
            best.score = dist;
            best.nearest_identity = entry.identity;
            best.nearest_index = entry.sample_index;
        }
    }
    return best;
}

Decision decide(double score, double threshold) {
    return score <= threshold ? Decision::known : Decision::unknown;
}

namespace {

double fraction_at_most(const std::vector<double>& sorted, double t) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    return static_cast<double>(count) / static_cast<double>(sorted.size());
}

}  // namespace

double calibrate_threshold(const std::vector<double>& known_scores,
                           const std::vector<double>& unknown_scores,
                           const ThresholdPolicy& policy) {
    if (known_scores.empty() || unknown_scores.empty())
        throw std::invalid_argument("calibrate_threshold: both score lists must be nonempty");

    std::vector<double> known = known_scores;
    std::vector<double> unknown = unknown_scores;
    std::sort(known.begin(), known.end());
    std::sort(unknown.begin(), unknown.end());

    std::vector<double> pooled;
    pooled.reserve(known.size() + unknown.size());
    pooled.insert(pooled.end(), known.begin(), known.end());
    pooled.insert(pooled.end(), unknown.begin(), unknown.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    // Candidates: one value below every score, the midpoints between
    // adjacent distinct scores, one value above every score.
    std::vector<double> candidates;
    candidates.reserve(pooled.size() + 1);
    candidates.push_back(pooled.front() - 1.0);
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
        candidates.push_back((pooled[i] + pooled[i + 1]) / 2.0);
    candidates.push_back(pooled.back() + 1.0);

    if (policy.kind == ThresholdPolicy::Kind::equal_error) {
        double best = candidates.front();
        double best_gap = std::numeric_limits<double>::infinity();
        for (double t : candidates) {
            const double fpr = fraction_at_most(unknown, t);
            const double fnr = 1.0 - fraction_at_most(known, t);
            const double gap = std::abs(fpr - fnr);
            if (gap < best_gap) {
                best_gap = gap;
                best = t;
            }
        }
        return best;
    }

    if (!(policy.alpha >= 0.0 && policy.alpha <= 1.0))
        throw std::invalid_argument("calibrate_threshold: target FPR must be in [0,1]");
    double best = candidates.front();
    for (double t : candidates)
        if (fraction_at_most(unknown, t) <= policy.alpha) best = std::max(best, t);
    return best;
}

void write_scores(const std::vector<ScoreRecord>& records, std::ostream& out) {
    for (const ScoreRecord& r : records)
        out << r.probe_id << "," << (r.truth_known ? "known" : "unknown") << ","
            << detail::format_double(r.score) << "," << r.nearest_identity << "\n";
}

void write_scores(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scores file '" + path + "'");
    write_scores(records, out);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<ScoreRecord> read_scores(std::istream& in) {
    std::vector<ScoreRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;

        const auto fail = [&](const std::string& what) {
            throw std::runtime_error("scores line " + std::to_string(line_no) + ": " + what);
        };

        std::size_t c1 = text.find(',');
        std::size_t c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
        std::size_t c3 = c2 == std::string_view::npos ? c2 : text.find(',', c2 + 1);
        if (c3 == std::string_view::npos)
            fail("expected '<probe_id>,<known|unknown>,<score>,<nearest_identity>'");

        ScoreRecord r;
        r.probe_id = std::string(text.substr(0, c1));
        const std::string_view truth = text.substr(c1 + 1, c2 - c1 - 1);
        if (truth == "known")
            r.truth_known = true;
        else if (truth == "unknown")
            r.truth_known = false;
        else
            fail("truth field must be 'known' or 'unknown'");
        if (!detail::parse_double(text.substr(c2 + 1, c3 - c2 - 1), r.score))
            fail("score is not a decimal real");
        r.nearest_identity = std::string(text.substr(c3 + 1));
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<ScoreRecord> read_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scores file '" + path + "'");
    return read_scores(in);
}

}  // namespace osfr
