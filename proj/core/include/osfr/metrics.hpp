#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace osfr {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

/// ROC points sorted by fpr, bracketed by sentinel thresholds -inf
/// (point (0,0)) and +inf (point (1,1)); auc is their trapezoidal
/// integral.
struct RocReport {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Per-trial AUCs with sample mean and sample standard deviation
/// (n-1 denominator; 0 for a single trial).
struct TrialAggregate {
    std::vector<double> aucs;
    double mean = 0.0;
    double std_dev = 0.0;
};

/// Sweeps every distinct score as an inclusive accept-if-below threshold:
/// TPR(t) = fraction of known scores <= t, FPR(t) = fraction of unknown
/// scores <= t. Scores shared by both classes step diagonally, which
/// makes the trapezoidal AUC match the Mann-Whitney statistic exactly.
/// Throws if either class is empty (AUC undefined; this also rejects
/// degenerate splits with no unknowns).
RocReport roc(const std::vector<double>& known_scores,
              const std::vector<double>& unknown_scores);

/// Rank-statistic AUC: mean over (known, unknown) pairs of
/// [1 if k < u, 0.5 if k = u, 0 otherwise]. Independent evaluation route
/// for cross-checking roc().auc.
double auc_mw(const std::vector<double>& known_scores,
              const std::vector<double>& unknown_scores);

TrialAggregate aggregate(const std::vector<double>& aucs);

/// Text form: `# auc <value>` header, then one `fpr,tpr,threshold` line
/// per point.
void write_roc(const RocReport& report, std::ostream& out);
void write_roc(const RocReport& report, const std::string& path);

}  // namespace osfr
