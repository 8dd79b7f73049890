#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "osfr/dataset.hpp"
#include "osfr/metrics.hpp"
#include "osfr/pairing.hpp"
#include "osfr/siamese.hpp"

namespace osfr {

struct SyntheticSpec {
    int identities = 20;
    int samples_per_identity = 10;
    int dim = 64;
    double spread = 0.1;
    std::uint64_t seed = 0;
};

/// Full description of one experiment: data source, protocol points,
/// pairing, architecture and training hyperparameters, repetitions and
/// the master seed. Everything an output report echoes back.
struct ExperimentConfig {
    std::string features_path;                 // used when synthetic is absent
    std::optional<SyntheticSpec> synthetic;

    SplitMode protocol_mode = SplitMode::percentage;
    std::vector<double> protocol_values;
    double train_fraction = 0.5;
    int min_samples_per_known = 2;

    PairAlgorithm pairing = PairAlgorithm::p1;
    int z = 2;

    std::vector<int> hidden_dims = {2048, 2048, 2048};

    double margin = 1.0;
    double learning_rate = 0.01;
    int epochs = 50;
    int batch_size = 32;

    int repetitions = 10;
    std::uint64_t master_seed = 0;
    std::string output_dir;                    // empty: keep results in memory only
};

struct PointResult {
    double protocol_value = 0.0;
    TrialAggregate aucs;
    std::vector<std::uint64_t> trial_seeds;
    std::vector<std::string> roc_files;        // relative to output_dir
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<PointResult> points;
};

/// Seed for (protocol point, repetition): chained splitmix64 finalizers,
/// mix64(mix64(mix64(master) ^ (point+1)) ^ (rep+1)). Stage seeds inside
/// a trial hang off this value the same way.
std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::size_t point_index,
                                std::size_t repetition);

/// Reads the JSON experiment config (schema documented in the README).
ExperimentConfig load_experiment_config(const std::string& path);

/// Runs split -> pairing -> training -> gallery scoring -> ROC for every
/// protocol point and repetition, then aggregates per point. When
/// output_dir is set, writes report.json, summary.txt and per-trial ROC
/// files. Errors carry (point, trial) context; a failed trial aborts the
/// run. Fully deterministic given the config.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Three-decimal human summary, one line per protocol point.
void write_summary(const ExperimentReport& report, std::ostream& out);

/// Generates a synthetic store and writes it in the feature-file format.
void write_synthetic_features(const SyntheticSpec& spec, const std::string& out_path);

/// Trains a net on every sample of the gallery feature file (all
/// identities enrolled) and saves it. Stage seeds derive from seed as in
/// run_experiment trials.
void train_model_file(const std::string& features_path, PairAlgorithm algorithm, int z,
                      const std::vector<int>& hidden_dims, const TrainConfig& cfg,
                      const std::string& model_out_path);

/// Scores every probe-file sample against the gallery file with a saved
/// model and emits the scores-export format. A probe's truth is "known"
/// iff its identity appears in the gallery file.
void score_probes_file(const std::string& model_path, const std::string& gallery_path,
                       const std::string& probes_path, std::ostream& out);

}  // namespace osfr
