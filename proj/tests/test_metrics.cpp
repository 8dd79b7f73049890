#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "osfr/metrics.hpp"
#include "osfr/rng.hpp"

using namespace osfr;

namespace {

// Scores drawn from a coarse grid so cross-class ties actually happen.
std::vector<double> gridded_scores(Rng& rng, std::size_t n, int grid) {
    std::vector<double> v(n);
    for (double& x : v) x = static_cast<double>(rng.next_below(static_cast<std::uint64_t>(grid))) / 8.0;
    return v;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfectly separated classes hit AUC 1 and 0") {
    const RocReport best = roc({0.1, 0.2}, {0.3, 0.4});
    CHECK(best.auc == 1.0);
    const RocReport worst = roc({0.3, 0.4}, {0.1, 0.2});
    CHECK(worst.auc == 0.0);

    CHECK(roc({0.0}, {1.0}).auc == 1.0);
    CHECK(auc_mw({0.0}, {1.0}) == 1.0);
}

TEST_CASE("indistinguishable classes sit at AUC one half") {
    const std::vector<double> same{0.1, 0.2, 0.3};
    CHECK(roc(same, same).auc == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(auc_mw(same, same) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK(roc({0.5}, {0.5}).auc == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(auc_mw({0.5}, {0.5}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("interleaved classes score the correct pair fraction") {
    // Pairs: (0.1,0.5)->1, (0.1,0.9)->1, (0.7,0.5)->0, (0.7,0.9)->1.
    CHECK(roc({0.1, 0.7}, {0.5, 0.9}).auc == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(auc_mw({0.1, 0.7}, {0.5, 0.9}) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("cross-class ties contribute half steps") {
    // Pairs: (0.1,0.2)->1, (0.1,0.3)->1, (0.2,0.2)->0.5, (0.2,0.3)->1.
    const double want = 3.5 / 4.0;
    CHECK(roc({0.1, 0.2}, {0.2, 0.3}).auc == doctest::Approx(want).epsilon(1e-15));
    CHECK(auc_mw({0.1, 0.2}, {0.2, 0.3}) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("roc endpoints and monotonicity") {
    Rng rng(31);
    const std::vector<double> known = gridded_scores(rng, 37, 16);
    const std::vector<double> unknown = gridded_scores(rng, 23, 16);
    const RocReport report = roc(known, unknown);

    REQUIRE(report.points.size() >= 2);
    CHECK(report.points.front().fpr == 0.0);
    CHECK(report.points.front().tpr == 0.0);
    CHECK(report.points.front().threshold == -std::numeric_limits<double>::infinity());
    CHECK(report.points.back().fpr == 1.0);
    CHECK(report.points.back().tpr == 1.0);
    CHECK(report.points.back().threshold == std::numeric_limits<double>::infinity());

    for (std::size_t i = 1; i < report.points.size(); ++i) {
        CHECK(report.points[i].fpr >= report.points[i - 1].fpr);
        CHECK(report.points[i].tpr >= report.points[i - 1].tpr);
        CHECK(report.points[i].threshold > report.points[i - 1].threshold);
    }

    // TPR at each threshold is the fraction of known scores at or below.
    for (const RocPoint& p : report.points) {
        int c = 0;
        for (double s : known) c += s <= p.threshold;
        CHECK(p.tpr == doctest::Approx(double(c) / double(known.size())).epsilon(1e-15));
    }
}

TEST_CASE("trapezoidal auc equals the rank statistic") {
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t nk = 1 + rng.next_below(40);
        const std::size_t nu = 1 + rng.next_below(40);
        // Alternate tie-rich and continuous score draws.
        std::vector<double> known, unknown;
        if (trial % 2 == 0) {
            known = gridded_scores(rng, nk, 12);
            unknown = gridded_scores(rng, nu, 12);
        } else {
            known.resize(nk);
            unknown.resize(nu);
            for (double& x : known) x = rng.normal();
            for (double& x : unknown) x = rng.normal(0.5, 1.0);
        }
        const double trapezoid = roc(known, unknown).auc;
        const double rank = auc_mw(known, unknown);
        CHECK(std::abs(trapezoid - rank) <= 1e-12);
    }
}

TEST_CASE("empty score lists are rejected") {
    CHECK_THROWS(roc({}, {0.5}));
    CHECK_THROWS(roc({0.5}, {}));
    CHECK_THROWS(auc_mw({}, {0.5}));
    CHECK_THROWS(auc_mw({0.5}, {}));
}

TEST_CASE("aggregate matches a one-pass reference") {
    const TrialAggregate two = aggregate({0.8, 0.9});
    CHECK(two.mean == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(two.std_dev == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
    CHECK(two.aucs == std::vector<double>{0.8, 0.9});

    const TrialAggregate one = aggregate({0.7});
    CHECK(one.mean == 0.7);
    CHECK(one.std_dev == 0.0);

    const TrialAggregate flat = aggregate({0.9, 0.9, 0.9});
    CHECK(flat.mean == 0.9);
    CHECK(flat.std_dev == 0.0);

    CHECK(aggregate({1.0, 0.0}).mean == 0.5);

    // Welford's one-pass update as the independent route.
    Rng rng(17);
    std::vector<double> values(257);
    for (double& v : values) v = rng.normal(0.9, 0.04);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double delta = values[i] - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (values[i] - mean);
    }
    const double sample_std = std::sqrt(m2 / static_cast<double>(values.size() - 1));
    const TrialAggregate agg = aggregate(values);
    CHECK(agg.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(agg.std_dev == doctest::Approx(sample_std).epsilon(1e-10));

    CHECK_THROWS(aggregate({}));
}

TEST_CASE("roc files carry the auc header and one line per point") {
    const RocReport report = roc({0.1, 0.25}, {0.2, 0.4});
    std::ostringstream out;
    write_roc(report, out);

    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("# auc ", 0) == 0);
    const double auc = std::stod(line.substr(6));
    CHECK(auc == doctest::Approx(report.auc).epsilon(1e-15));

    REQUIRE(std::getline(in, line));  // column header comment
    CHECK(line.rfind("#", 0) == 0);

    std::size_t rows = 0;
    while (std::getline(in, line)) {
        double fpr = 0, tpr = 0;
        char threshold[64];
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%63s", &fpr, &tpr, threshold) == 3);
        CHECK(fpr == doctest::Approx(report.points[rows].fpr));
        CHECK(tpr == doctest::Approx(report.points[rows].tpr));
        ++rows;
    }
    CHECK(rows == report.points.size());
}

}  // TEST_SUITE
