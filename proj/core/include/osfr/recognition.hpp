#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "osfr/dataset.hpp"
#include "osfr/siamese.hpp"

namespace osfr {

struct GalleryEntry {
    std::string identity;
    std::size_t sample_index = 0;
    Eigen::VectorXd embedding;
};

/// Precomputed embeddings of every gallery train sample. Immutable after
/// build; probes may be scored against it concurrently.
struct GalleryIndex {
    std::vector<GalleryEntry> entries;
};

struct ProbeScore {
    double score = 0.0;
    std::string nearest_identity;
    std::size_t nearest_index = 0;
};

enum class Decision { known, unknown };

/// Embeds every train sample of the split once. Valid because the pair
/// distance factorizes through per-input embeddings.
GalleryIndex build_gallery(const SiameseNet& net, const ProtocolSplit& split,
                           const FeatureStore& store);

/// Minimum embedding distance between the probe and the gallery entries;
/// ties keep the earliest entry.
ProbeScore score_probe(const GalleryIndex& index, const SiameseNet& net,
                       const Eigen::VectorXd& probe);

/// Known iff score <= threshold (inclusive boundary).
Decision decide(double score, double threshold);

struct ThresholdPolicy {
    enum class Kind { equal_error, target_fpr };
    Kind kind = Kind::equal_error;
    double alpha = 0.0;

    static ThresholdPolicy equal_error() { return {Kind::equal_error, 0.0}; }
    static ThresholdPolicy target_fpr(double alpha) { return {Kind::target_fpr, alpha}; }
};

/// Sweeps candidate thresholds (midpoints between adjacent distinct
/// scores, plus a below-all and an above-all candidate). equal_error
/// returns the candidate minimizing |FPR - FNR|; target_fpr returns the
/// largest candidate with FPR <= alpha.
double calibrate_threshold(const std::vector<double>& known_scores,
                           const std::vector<double>& unknown_scores,
                           const ThresholdPolicy& policy);

/// Row of the scores-export format:
/// <probe_id>,<truth:known|unknown>,<score>,<nearest_identity>
struct ScoreRecord {
    std::string probe_id;
    bool truth_known = false;
    double score = 0.0;
    std::string nearest_identity;
};

void write_scores(const std::vector<ScoreRecord>& records, std::ostream& out);
void write_scores(const std::vector<ScoreRecord>& records, const std::string& path);
std::vector<ScoreRecord> read_scores(std::istream& in);
std::vector<ScoreRecord> read_scores(const std::string& path);

}  // namespace osfr
