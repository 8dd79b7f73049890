#include "osfr/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "osfr/recognition.hpp"
#include "osfr/rng.hpp"

namespace osfr {

namespace {

using json = nlohmann::ordered_json;

// Stage tags for deriving independent per-stage seeds inside one trial.
enum : std::uint64_t { kSplitStage = 1, kPairStage = 2, kInitStage = 3, kTrainStage = 4 };

std::uint64_t stage_seed(std::uint64_t trial_seed, std::uint64_t stage) {
    return mix64(trial_seed ^ stage);
}

std::string pairing_name(PairAlgorithm a) { return a == PairAlgorithm::p1 ? "P1" : "P2"; }

PairAlgorithm parse_pairing(const std::string& name) {
    if (name == "P1" || name == "p1") return PairAlgorithm::p1;
    if (name == "P2" || name == "p2") return PairAlgorithm::p2;
    throw std::runtime_error("config: pairing algorithm must be 'P1' or 'P2', got '" + name + "'");
}

std::string mode_name(SplitMode m) { return m == SplitMode::percentage ? "percentage" : "absolute"; }

SplitMode parse_mode(const std::string& name) {
    if (name == "percentage") return SplitMode::percentage;
    if (name == "absolute") return SplitMode::absolute;
    throw std::runtime_error("config: protocol mode must be 'percentage' or 'absolute', got '" + name + "'");
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.synthetic) {
        j["features"]["synthetic"] = {{"identities", cfg.synthetic->identities},
                                      {"samples_per_identity", cfg.synthetic->samples_per_identity},
                                      {"dim", cfg.synthetic->dim},
                                      {"spread", cfg.synthetic->spread},
                                      {"seed", cfg.synthetic->seed}};
    } else {
        j["features"]["path"] = cfg.features_path;
    }
    j["protocol"] = {{"mode", mode_name(cfg.protocol_mode)},
                     {"values", cfg.protocol_values},
                     {"train_fraction", cfg.train_fraction},
                     {"min_samples_per_known", cfg.min_samples_per_known}};
    j["pairing"] = {{"algorithm", pairing_name(cfg.pairing)}, {"z", cfg.z}};
    j["net"] = {{"hidden_dims", cfg.hidden_dims}};
    j["train"] = {{"margin", cfg.margin},
                  {"learning_rate", cfg.learning_rate},
                  {"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size}};
    j["repetitions"] = cfg.repetitions;
    j["master_seed"] = cfg.master_seed;
    j["output_dir"] = cfg.output_dir;
    return j;
}

void validate_config(const ExperimentConfig& cfg) {
    if (!cfg.synthetic && cfg.features_path.empty())
        throw std::runtime_error("config: either a features path or a synthetic spec is required");
    if (cfg.protocol_values.empty()) throw std::runtime_error("config: protocol values list is empty");
    if (cfg.repetitions < 1) throw std::runtime_error("config: repetitions must be >= 1");
    if (cfg.z < 0) throw std::runtime_error("config: z must be >= 0");
    if (cfg.hidden_dims.empty()) throw std::runtime_error("config: hidden_dims list is empty");
    for (int d : cfg.hidden_dims)
        if (d < 1) throw std::runtime_error("config: hidden dims must be positive");
}

}  // namespace

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::size_t point_index,
                                std::size_t repetition) {
    return mix64(mix64(mix64(master_seed) ^ (point_index + 1)) ^ (repetition + 1));
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config file '" + path + "': " + e.what());
    }

    ExperimentConfig cfg;
    try {
        const auto& features = j.at("features");
        if (features.contains("synthetic")) {
            const auto& s = features.at("synthetic");
            SyntheticSpec spec;
            spec.identities = s.at("identities").get<int>();
            spec.samples_per_identity = s.at("samples_per_identity").get<int>();
            spec.dim = s.at("dim").get<int>();
            spec.spread = s.value("spread", spec.spread);
            spec.seed = s.value("seed", spec.seed);
            cfg.synthetic = spec;
        } else {
            cfg.features_path = features.at("path").get<std::string>();
        }

        const auto& protocol = j.at("protocol");
        cfg.protocol_mode = parse_mode(protocol.at("mode").get<std::string>());
        cfg.protocol_values = protocol.at("values").get<std::vector<double>>();
        cfg.train_fraction = protocol.value("train_fraction", cfg.train_fraction);
        cfg.min_samples_per_known = protocol.value("min_samples_per_known", cfg.min_samples_per_known);

        if (j.contains("pairing")) {
            const auto& pairing = j.at("pairing");
            if (pairing.contains("algorithm"))
                cfg.pairing = parse_pairing(pairing.at("algorithm").get<std::string>());
            cfg.z = pairing.value("z", cfg.z);
        }
        if (j.contains("net")) cfg.hidden_dims = j.at("net").value("hidden_dims", cfg.hidden_dims);
        if (j.contains("train")) {
            const auto& train = j.at("train");
            cfg.margin = train.value("margin", cfg.margin);
            cfg.learning_rate = train.value("learning_rate", cfg.learning_rate);
            cfg.epochs = train.value("epochs", cfg.epochs);
            cfg.batch_size = train.value("batch_size", cfg.batch_size);
        }
        cfg.repetitions = j.value("repetitions", cfg.repetitions);
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        throw std::runtime_error("config file '" + path + "': " + e.what());
    }
    validate_config(cfg);
    return cfg;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);

    const FeatureStore store =
        cfg.synthetic ? generate_synthetic(cfg.synthetic->identities, cfg.synthetic->samples_per_identity,
                                           cfg.synthetic->dim, cfg.synthetic->spread, cfg.synthetic->seed)
                      : load_features(cfg.features_path);

    const bool write_files = !cfg.output_dir.empty();
    const std::filesystem::path out_dir = cfg.output_dir;
    if (write_files) std::filesystem::create_directories(out_dir / "trials");

    std::vector<int> layer_dims;
    layer_dims.push_back(store.dim());
    layer_dims.insert(layer_dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());

    ExperimentReport report;
    report.config = cfg;

    for (std::size_t ip = 0; ip < cfg.protocol_values.size(); ++ip) {
        PointResult point;
        point.protocol_value = cfg.protocol_values[ip];
        std::vector<double> aucs;

        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            const std::uint64_t trial_seed = derive_trial_seed(cfg.master_seed, ip, static_cast<std::size_t>(rep));
            point.trial_seeds.push_back(trial_seed);
            try {
                SplitSpec spec;
                spec.mode = cfg.protocol_mode;
                spec.value = cfg.protocol_values[ip];
                spec.min_samples_per_known = cfg.min_samples_per_known;
                const ProtocolSplit split =
                    make_split(store, spec, cfg.train_fraction, stage_seed(trial_seed, kSplitStage));

                const PairSet pairs = cfg.pairing == PairAlgorithm::p1
                                          ? pair_p1(split, store, cfg.z, stage_seed(trial_seed, kPairStage))
                                          : pair_p2(split, store, cfg.z, stage_seed(trial_seed, kPairStage));

                TrainConfig tc;
                tc.margin = cfg.margin;
                tc.learning_rate = cfg.learning_rate;
                tc.epochs = cfg.epochs;
                tc.batch_size = cfg.batch_size;
                tc.rng_seed = stage_seed(trial_seed, kTrainStage);
                auto [net, history] =
                    train(init_net(layer_dims, stage_seed(trial_seed, kInitStage)), pairs, store, tc);

                const GalleryIndex gallery = build_gallery(net, split, store);
                std::vector<double> known_scores;
                known_scores.reserve(split.test_known.size());
                for (std::size_t s : split.test_known)
                    known_scores.push_back(score_probe(gallery, net, store.vector_of(s)).score);
                std::vector<double> unknown_scores;
                unknown_scores.reserve(split.test_unknown.size());
                for (std::size_t s : split.test_unknown)
                    unknown_scores.push_back(score_probe(gallery, net, store.vector_of(s)).score);

                const RocReport trial_roc = roc(known_scores, unknown_scores);
                aucs.push_back(trial_roc.auc);

                if (write_files) {
                    char name[64];
                    std::snprintf(name, sizeof(name), "trials/point%zu_rep%d_roc.csv", ip, rep);
                    write_roc(trial_roc, (out_dir / name).string());
                    point.roc_files.emplace_back(name);
                }
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "protocol point " << ip << " (value " << cfg.protocol_values[ip] << "), trial " << rep
                    << ": " << e.what();
                throw std::runtime_error(msg.str());
            }
        }
        point.aucs = aggregate(aucs);
        report.points.push_back(std::move(point));
    }

    if (write_files) {
        json j;
        j["config"] = config_to_json(cfg);
        j["points"] = json::array();
        for (const PointResult& p : report.points) {
            json pj;
            pj["value"] = p.protocol_value;
            pj["trial_seeds"] = p.trial_seeds;
            pj["aucs"] = p.aucs.aucs;
            pj["mean_auc"] = p.aucs.mean;
            pj["std_auc"] = p.aucs.std_dev;
            pj["roc_files"] = p.roc_files;
            j["points"].push_back(std::move(pj));
        }
        std::ofstream out(out_dir / "report.json");
        if (!out) throw std::runtime_error("cannot write report to '" + (out_dir / "report.json").string() + "'");
        out << j.dump(2) << "\n";

        std::ofstream summary(out_dir / "summary.txt");
        if (!summary)
            throw std::runtime_error("cannot write summary to '" + (out_dir / "summary.txt").string() + "'");
        write_summary(report, summary);
    }
    return report;
}

void write_summary(const ExperimentReport& report, std::ostream& out) {
    const ExperimentConfig& cfg = report.config;
    out << "protocol=" << mode_name(cfg.protocol_mode) << " pairing=" << pairing_name(cfg.pairing)
        << " z=" << cfg.z << " repetitions=" << cfg.repetitions << " master_seed=" << cfg.master_seed
        << "\n";
    char line[128];
    for (const PointResult& p : report.points) {
        if (cfg.protocol_mode == SplitMode::percentage)
            std::snprintf(line, sizeof(line), "known=%-6g auc %.3f +/- %.3f\n", p.protocol_value,
                          p.aucs.mean, p.aucs.std_dev);
        else
            std::snprintf(line, sizeof(line), "known=%-6.0f auc %.3f +/- %.3f\n", p.protocol_value,
                          p.aucs.mean, p.aucs.std_dev);
        out << line;
    }
}

void write_synthetic_features(const SyntheticSpec& spec, const std::string& out_path) {
    save_features(generate_synthetic(spec.identities, spec.samples_per_identity, spec.dim, spec.spread,
                                     spec.seed),
                  out_path);
}

namespace {

// Enrollment pseudo-split: every sample of every identity is gallery
// train data (no held-out test side).
ProtocolSplit enroll_all(const FeatureStore& store) {
    ProtocolSplit split;
    split.known_ids.insert(store.identities().begin(), store.identities().end());
    split.train.resize(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) split.train[i] = i;
    return split;
}

}  // namespace

void train_model_file(const std::string& features_path, PairAlgorithm algorithm, int z,
                      const std::vector<int>& hidden_dims, const TrainConfig& cfg,
                      const std::string& model_out_path) {
    const FeatureStore store = load_features(features_path);
    const ProtocolSplit split = enroll_all(store);

    const std::uint64_t seed = cfg.rng_seed;
    const PairSet pairs = algorithm == PairAlgorithm::p1
                              ? pair_p1(split, store, z, stage_seed(seed, kPairStage))
                              : pair_p2(split, store, z, stage_seed(seed, kPairStage));

    std::vector<int> layer_dims;
    layer_dims.push_back(store.dim());
    layer_dims.insert(layer_dims.end(), hidden_dims.begin(), hidden_dims.end());

    TrainConfig tc = cfg;
    tc.rng_seed = stage_seed(seed, kTrainStage);
    auto [net, history] = train(init_net(layer_dims, stage_seed(seed, kInitStage)), pairs, store, tc);
    save_net(net, model_out_path);
}

void score_probes_file(const std::string& model_path, const std::string& gallery_path,
                       const std::string& probes_path, std::ostream& out) {
    const SiameseNet net = load_net(model_path);
    const FeatureStore gallery_store = load_features(gallery_path);
    if (gallery_store.dim() != net.input_dim())
        throw std::runtime_error("gallery dim " + std::to_string(gallery_store.dim()) +
                                 " does not match model input dim " + std::to_string(net.input_dim()));
    const FeatureStore probe_store = load_features(probes_path);
    if (probe_store.dim() != net.input_dim())
        throw std::runtime_error("probe dim " + std::to_string(probe_store.dim()) +
                                 " does not match model input dim " + std::to_string(net.input_dim()));

    const GalleryIndex gallery = build_gallery(net, enroll_all(gallery_store), gallery_store);

    std::vector<ScoreRecord> records;
    records.reserve(probe_store.size());
    for (std::size_t i = 0; i < probe_store.size(); ++i) {
        const ProbeScore score = score_probe(gallery, net, probe_store.vector_of(i));
        records.push_back({std::to_string(i), gallery_store.has_identity(probe_store.identity_of(i)),
                           score.score, score.nearest_identity});
    }
    write_scores(records, out);
}

}  // namespace osfr
