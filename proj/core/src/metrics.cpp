#include "osfr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "text_util.hpp"

namespace osfr {

RocReport roc(const std::vector<double>& known_scores,
              const std::vector<double>& unknown_scores) {
    if (known_scores.empty())
        throw std::invalid_argument("roc: no known-probe scores (AUC undefined)");
    if (unknown_scores.empty())
        throw std::invalid_argument("roc: no unknown-probe scores (AUC undefined; "
                                    "degenerate split with no unknown identities?)");

    std::vector<double> known = known_scores;
    std::vector<double> unknown = unknown_scores;
    std::sort(known.begin(), known.end());
    std::sort(unknown.begin(), unknown.end());

    std::vector<double> thresholds;
    thresholds.reserve(known.size() + unknown.size());
    std::merge(known.begin(), known.end(), unknown.begin(), unknown.end(),
               std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocReport report;
    report.points.reserve(thresholds.size() + 2);
    report.points.push_back({0.0, 0.0, -std::numeric_limits<double>::infinity()});

    std::size_t k_at_most = 0;
    std::size_t u_at_most = 0;
    for (double t : thresholds) {
        while (k_at_most < known.size() && known[k_at_most] <= t) ++k_at_most;
        while (u_at_most < unknown.size() && unknown[u_at_most] <= t) ++u_at_most;
        report.points.push_back({static_cast<double>(u_at_most) / static_cast<double>(unknown.size()),
                                 static_cast<double>(k_at_most) / static_cast<double>(known.size()), t});
    }
    report.points.push_back({1.0, 1.0, std::numeric_limits<double>::infinity()});

    double auc = 0.0;
    for (std::size_t i = 0; i + 1 < report.points.size(); ++i) {
        const RocPoint& a = report.points[i];
        const RocPoint& b = report.points[i + 1];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    report.auc = auc;
    return report;
}

double auc_mw(const std::vector<double>& known_scores,
              const std::vector<double>& unknown_scores) {
    if (known_scores.empty() || unknown_scores.empty())
        throw std::invalid_argument("auc_mw: both score lists must be nonempty");
    double sum = 0.0;
    for (double k : known_scores)
        for (double u : unknown_scores) {
            if (k < u)
                sum += 1.0;
            else if (k == u)
                sum += 0.5;
        }
    return sum / (static_cast<double>(known_scores.size()) * static_cast<double>(unknown_scores.size()));
}

TrialAggregate aggregate(const std::vector<double>& aucs) {
    if (aucs.empty()) throw std::invalid_argument("aggregate: empty AUC list");
    TrialAggregate agg;
    agg.aucs = aucs;
    double sum = 0.0;
    for (double a : aucs) sum += a;
    agg.mean = sum / static_cast<double>(aucs.size());
    if (aucs.size() > 1) {
        double ss = 0.0;
        for (double a : aucs) ss += (a - agg.mean) * (a - agg.mean);
        agg.std_dev = std::sqrt(ss / static_cast<double>(aucs.size() - 1));
    }
    return agg;
}

void write_roc(const RocReport& report, std::ostream& out) {
    out << "# auc " << detail::format_double(report.auc) << "\n";
    out << "# fpr,tpr,threshold\n";
    for (const RocPoint& p : report.points)
        out << detail::format_double(p.fpr) << "," << detail::format_double(p.tpr) << ","
            << detail::format_double(p.threshold) << "\n";
}

void write_roc(const RocReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ROC file '" + path + "'");
    write_roc(report, out);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace osfr
