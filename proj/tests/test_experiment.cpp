#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "osfr/experiment.hpp"
#include "osfr/recognition.hpp"
#include "osfr/rng.hpp"
#include "test_util.hpp"

using namespace osfr;
using osfr_test::TempDir;
using osfr_test::write_file;

namespace {

// Small, fast experiment shared by several cases.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    SyntheticSpec spec;
    spec.identities = 8;
    spec.samples_per_identity = 4;
    spec.dim = 8;
    // Wide clusters keep trial AUCs off the 1.0 ceiling, so seed changes
    // are visible in the results.
    spec.spread = 0.8;
    spec.seed = 4;
    cfg.synthetic = spec;
    cfg.protocol_mode = SplitMode::absolute;
    cfg.protocol_values = {3, 5};
    cfg.pairing = PairAlgorithm::p2;
    cfg.z = 2;
    cfg.hidden_dims = {8, 4};
    cfg.epochs = 4;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 8;
    cfg.repetitions = 3;
    cfg.master_seed = 11;
    return cfg;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("trial seeds follow the documented mix64 chain") {
    const std::uint64_t master = 0xDEADBEEFull;
    std::set<std::uint64_t> seen;
    for (std::size_t point = 0; point < 4; ++point)
        for (std::size_t rep = 0; rep < 10; ++rep) {
            const std::uint64_t seed = derive_trial_seed(master, point, rep);
            CHECK(seed == mix64(mix64(mix64(master) ^ (point + 1)) ^ (rep + 1)));
            seen.insert(seed);
        }
    CHECK(seen.size() == 40);  // no collisions across the grid
    CHECK(derive_trial_seed(master, 0, 0) != derive_trial_seed(master + 1, 0, 0));
}

TEST_CASE("config files parse with defaults and overrides") {
    TempDir dir;
    const std::string full = write_file(dir, "full.json", R"({
        "features": {"path": "feat.txt"},
        "protocol": {"mode": "percentage", "values": [0.1, 0.5, 0.9],
                     "train_fraction": 0.6, "min_samples_per_known": 3},
        "pairing": {"algorithm": "P2", "z": 4},
        "net": {"hidden_dims": [32, 16]},
        "train": {"margin": 2.0, "learning_rate": 0.02, "epochs": 9, "batch_size": 64},
        "repetitions": 5,
        "master_seed": 77,
        "output_dir": "out"
    })");
    const ExperimentConfig cfg = load_experiment_config(full);
    CHECK(cfg.features_path == "feat.txt");
    CHECK_FALSE(cfg.synthetic.has_value());
    CHECK(cfg.protocol_mode == SplitMode::percentage);
    CHECK(cfg.protocol_values == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(cfg.train_fraction == 0.6);
    CHECK(cfg.min_samples_per_known == 3);
    CHECK(cfg.pairing == PairAlgorithm::p2);
    CHECK(cfg.z == 4);
    CHECK(cfg.hidden_dims == std::vector<int>{32, 16});
    CHECK(cfg.margin == 2.0);
    CHECK(cfg.learning_rate == 0.02);
    CHECK(cfg.epochs == 9);
    CHECK(cfg.batch_size == 64);
    CHECK(cfg.repetitions == 5);
    CHECK(cfg.master_seed == 77);
    CHECK(cfg.output_dir == "out");

    // Synthetic source plus defaults everywhere else.
    const std::string minimal = write_file(dir, "min.json", R"({
        "features": {"synthetic": {"identities": 6, "samples_per_identity": 5, "dim": 10}},
        "protocol": {"mode": "absolute", "values": [4]}
    })");
    const ExperimentConfig min_cfg = load_experiment_config(minimal);
    REQUIRE(min_cfg.synthetic.has_value());
    CHECK(min_cfg.synthetic->identities == 6);
    CHECK(min_cfg.synthetic->dim == 10);
    CHECK(min_cfg.synthetic->spread == SyntheticSpec{}.spread);
    CHECK(min_cfg.train_fraction == 0.5);
    CHECK(min_cfg.pairing == PairAlgorithm::p1);
    CHECK(min_cfg.z == 2);
    CHECK(min_cfg.hidden_dims == std::vector<int>{2048, 2048, 2048});
    CHECK(min_cfg.repetitions == 10);
    CHECK(min_cfg.master_seed == 0);
}

TEST_CASE("bad config files are rejected with clear errors") {
    TempDir dir;
    auto config_err = [&](const char* name, const std::string& body) -> std::string {
        try {
            load_experiment_config(write_file(dir, name, body));
        } catch (const std::exception& e) {
            return e.what();
        }
        return "";
    };

    CHECK(config_err("a", "{not json") != "");
    CHECK(config_err("b", R"({"protocol": {"mode": "percentage", "values": [0.5]}})") != "");
    CHECK(config_err("c", R"({"features": {"path": "f"},
        "protocol": {"mode": "sideways", "values": [0.5]}})")
              .find("sideways") != std::string::npos);
    CHECK(config_err("d", R"({"features": {"path": "f"},
        "protocol": {"mode": "absolute", "values": []}})") != "");
    CHECK(config_err("e", R"({"features": {"path": "f"},
        "protocol": {"mode": "absolute", "values": [3]},
        "pairing": {"algorithm": "P3"}})")
              .find("P3") != std::string::npos);
    CHECK(config_err("f", R"({"features": {"path": "f"},
        "protocol": {"mode": "absolute", "values": [3]},
        "net": {"hidden_dims": []}})") != "");
    CHECK(config_err("g", R"({"features": {"path": "f"},
        "protocol": {"mode": "absolute", "values": [3]},
        "repetitions": 0})") != "");
    CHECK_THROWS(load_experiment_config(dir.file("missing.json")));
}

TEST_CASE("experiments reproduce bit-identical results per master seed") {
    const ExperimentConfig cfg = tiny_config();
    const ExperimentReport a = run_experiment(cfg);
    const ExperimentReport b = run_experiment(cfg);

    REQUIRE(a.points.size() == 2);
    REQUIRE(b.points.size() == 2);
    for (std::size_t p = 0; p < a.points.size(); ++p) {
        CHECK(a.points[p].aucs.aucs == b.points[p].aucs.aucs);
        CHECK(a.points[p].aucs.mean == b.points[p].aucs.mean);
        CHECK(a.points[p].trial_seeds == b.points[p].trial_seeds);
        REQUIRE(a.points[p].aucs.aucs.size() == 3);
        for (double auc : a.points[p].aucs.aucs) {
            CHECK(auc >= 0.0);
            CHECK(auc <= 1.0);
        }
        for (std::size_t r = 0; r < 3; ++r)
            CHECK(a.points[p].trial_seeds[r] == derive_trial_seed(cfg.master_seed, p, r));
    }

    ExperimentConfig other = cfg;
    other.master_seed = 12;
    const ExperimentReport c = run_experiment(other);
    CHECK(c.points[0].aucs.aucs != a.points[0].aucs.aucs);
}

TEST_CASE("experiment output directory holds report, summary and rocs") {
    TempDir dir;
    ExperimentConfig cfg = tiny_config();
    cfg.output_dir = dir.file("out");
    const ExperimentReport report = run_experiment(cfg);

    namespace fs = std::filesystem;
    REQUIRE(fs::exists(fs::path(cfg.output_dir) / "report.json"));
    REQUIRE(fs::exists(fs::path(cfg.output_dir) / "summary.txt"));

    std::ifstream in(fs::path(cfg.output_dir) / "report.json");
    const nlohmann::json j = nlohmann::json::parse(in);
    REQUIRE(j.at("points").size() == 2);
    CHECK(j.at("config").at("repetitions").get<int>() == 3);
    for (std::size_t p = 0; p < 2; ++p) {
        const auto& pj = j.at("points").at(p);
        CHECK(pj.at("mean_auc").get<double>() == report.points[p].aucs.mean);
        CHECK(pj.at("aucs").get<std::vector<double>>() == report.points[p].aucs.aucs);
        for (const auto& rel : pj.at("roc_files")) {
            CHECK(fs::exists(fs::path(cfg.output_dir) / rel.get<std::string>()));
        }
    }
}

TEST_CASE("trial failures carry point and repetition context") {
    ExperimentConfig cfg = tiny_config();
    cfg.protocol_values = {20};  // more identities than the store holds
    try {
        run_experiment(cfg);
        FAIL("expected run_experiment to throw");
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        CHECK(msg.find("protocol point 0") != std::string::npos);
        CHECK(msg.find("trial 0") != std::string::npos);
    }
}

TEST_CASE("summary lines show three-decimal mean and spread") {
    const ExperimentReport report = run_experiment(tiny_config());
    std::ostringstream out;
    write_summary(report, out);
    const std::string text = out.str();

    std::istringstream lines(text);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line.find("pairing=P2") != std::string::npos);
    CHECK(line.find("master_seed=11") != std::string::npos);
    int rows = 0;
    while (std::getline(lines, line)) {
        double value = 0, mean = 0, std_dev = 0;
        REQUIRE(std::sscanf(line.c_str(), "known=%lf auc %lf +/- %lf", &value, &mean, &std_dev) == 3);
        CHECK(value == report.points[rows].protocol_value);
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("synthetic feature files are byte-deterministic and lossless") {
    TempDir dir;
    SyntheticSpec spec;
    spec.identities = 4;
    spec.samples_per_identity = 3;
    spec.dim = 5;
    spec.spread = 0.0;
    spec.seed = 77;

    const std::string a = dir.file("a.txt");
    const std::string b = dir.file("b.txt");
    write_synthetic_features(spec, a);
    write_synthetic_features(spec, b);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(a) == slurp(b));

    // The text round trip is exact: the loaded store matches the generator
    // output bit for bit.
    const FeatureStore direct = generate_synthetic(4, 3, 5, 0.0, 77);
    const FeatureStore loaded = load_features(a);
    REQUIRE(loaded.size() == direct.size());
    CHECK(loaded.dim() == direct.dim());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(loaded.identity_of(i) == direct.identity_of(i));
        CHECK(loaded.vector_of(i) == direct.vector_of(i));
    }
    for (const auto& id : loaded.identities())
        CHECK(loaded.samples_of(id).size() == 3);

    // Zero spread collapses every identity onto its centre.
    for (const auto& id : loaded.identities()) {
        const auto& s = loaded.samples_of(id);
        for (std::size_t j = 1; j < s.size(); ++j)
            CHECK(loaded.vector_of(s[j]) == loaded.vector_of(s[0]));
    }
}

TEST_CASE("synthetic feature files feed the train and score pipeline") {
    TempDir dir;
    SyntheticSpec spec;
    spec.identities = 6;
    spec.samples_per_identity = 4;
    spec.dim = 10;
    spec.spread = 0.2;
    spec.seed = 21;
    const std::string features = dir.file("features.txt");
    write_synthetic_features(spec, features);

    const FeatureStore store = load_features(features);
    CHECK(store.identity_count() == 6);
    CHECK(store.size() == 24);

    // Train on four identities, score probes from all six: the two
    // unenrolled identities must come back with truth "unknown".
    FeatureStore gallery_store(10);
    FeatureStore probe_store(10);
    for (std::size_t i = 0; i < store.size(); ++i) {
        const std::string& id = store.identity_of(i);
        if (id == "id0004" || id == "id0005")
            probe_store.add(id, store.vector_of(i));
        else if (store.samples_of(id)[0] == i || store.samples_of(id)[1] == i)
            gallery_store.add(id, store.vector_of(i));
        else
            probe_store.add(id, store.vector_of(i));
    }
    // The final probe duplicates an enrolled train vector, so its minimum
    // distance must come out exactly zero.
    probe_store.add(gallery_store.identity_of(0), gallery_store.vector_of(0));

    const std::string gallery_path = dir.file("gallery.txt");
    const std::string probes_path = dir.file("probes.txt");
    save_features(gallery_store, gallery_path);
    save_features(probe_store, probes_path);

    TrainConfig tc;
    tc.epochs = 6;
    tc.learning_rate = 0.05;
    tc.batch_size = 16;
    tc.rng_seed = 5;
    const std::string model_path = dir.file("model.bin");
    train_model_file(gallery_path, PairAlgorithm::p1, 2, {8, 4}, tc, model_path);

    const SiameseNet net = load_net(model_path);
    CHECK(net.input_dim() == 10);
    CHECK(net.output_dim() == 4);

    std::ostringstream out;
    score_probes_file(model_path, gallery_path, probes_path, out);
    std::istringstream in(out.str());
    const std::vector<ScoreRecord> records = read_scores(in);
    REQUIRE(records.size() == probe_store.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const bool is_enrolled = gallery_store.has_identity(probe_store.identity_of(i));
        CHECK(records[i].truth_known == is_enrolled);
        CHECK(records[i].score >= 0.0);
        CHECK(gallery_store.has_identity(records[i].nearest_identity));
    }
    CHECK(records.back().score == 0.0);
    CHECK(records.back().nearest_identity == gallery_store.identity_of(0));

    // The file-level scorer is exactly the library composition: embed the
    // gallery once, then take each probe's minimum embedding distance.
    ProtocolSplit enrolled;
    for (const auto& id : gallery_store.identities()) enrolled.known_ids.insert(id);
    for (std::size_t i = 0; i < gallery_store.size(); ++i) enrolled.train.push_back(i);
    const GalleryIndex index = build_gallery(net, enrolled, gallery_store);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ProbeScore ps = score_probe(index, net, probe_store.vector_of(i));
        CHECK(records[i].score == ps.score);
        CHECK(records[i].nearest_identity == ps.nearest_identity);
    }

    // Model/feature dimension mismatches are caught up front.
    SyntheticSpec wrong = spec;
    wrong.dim = 7;
    const std::string wrong_path = dir.file("wrong.txt");
    write_synthetic_features(wrong, wrong_path);
    std::ostringstream sink;
    CHECK_THROWS(score_probes_file(model_path, wrong_path, probes_path, sink));
    CHECK_THROWS(score_probes_file(model_path, gallery_path, wrong_path, sink));
}

}  // TEST_SUITE
