// Command-line front end: experiment runs, synthetic data, model training,
// probe scoring, threshold calibration and ROC export.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "osfr/experiment.hpp"
#include "osfr/metrics.hpp"
#include "osfr/recognition.hpp"

namespace {

struct RunArgs {
    std::string config_path;
    std::string output_dir;
};

struct SynthArgs {
    osfr::SyntheticSpec spec;
    std::string out_path;
};

struct TrainArgs {
    std::string features_path;
    std::string model_path;
    std::string algorithm = "P1";
    int z = 2;
    std::vector<int> hidden_dims = {2048, 2048, 2048};
    osfr::TrainConfig cfg;
};

struct ScoreArgs {
    std::string model_path;
    std::string gallery_path;
    std::string probes_path;
    std::string out_path;  // empty: stdout
};

struct CalibrateArgs {
    std::string scores_path;
    std::string policy = "eer";
    double alpha = 0.01;
};

struct RocArgs {
    std::string scores_path;
    std::string out_path;  // empty: stdout
};

void split_by_truth(const std::vector<osfr::ScoreRecord>& records, std::vector<double>& known,
                    std::vector<double>& unknown) {
    for (const auto& r : records) (r.truth_known ? known : unknown).push_back(r.score);
}

int run_command(const RunArgs& args) {
    osfr::ExperimentConfig cfg = osfr::load_experiment_config(args.config_path);
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    const osfr::ExperimentReport report = osfr::run_experiment(cfg);
    osfr::write_summary(report, std::cout);
    return 0;
}

int synth_command(const SynthArgs& args) {
    osfr::write_synthetic_features(args.spec, args.out_path);
    return 0;
}

int train_command(const TrainArgs& args) {
    const auto algorithm = (args.algorithm == "P1" || args.algorithm == "p1")
                               ? osfr::PairAlgorithm::p1
                               : osfr::PairAlgorithm::p2;
    osfr::train_model_file(args.features_path, algorithm, args.z, args.hidden_dims, args.cfg,
                           args.model_path);
    return 0;
}

int score_command(const ScoreArgs& args) {
    if (args.out_path.empty()) {
        osfr::score_probes_file(args.model_path, args.gallery_path, args.probes_path, std::cout);
        return 0;
    }
    std::ofstream out(args.out_path);
    if (!out) throw std::runtime_error("cannot open '" + args.out_path + "' for writing");
    osfr::score_probes_file(args.model_path, args.gallery_path, args.probes_path, out);
    return 0;
}

int calibrate_command(const CalibrateArgs& args) {
    const auto records = osfr::read_scores(args.scores_path);
    std::vector<double> known, unknown;
    split_by_truth(records, known, unknown);
    const auto policy = args.policy == "eer" ? osfr::ThresholdPolicy::equal_error()
                                             : osfr::ThresholdPolicy::target_fpr(args.alpha);
    const double threshold = osfr::calibrate_threshold(known, unknown, policy);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g\n", threshold);
    std::cout << buf;
    return 0;
}

int roc_command(const RocArgs& args) {
    const auto records = osfr::read_scores(args.scores_path);
    std::vector<double> known, unknown;
    split_by_truth(records, known, unknown);
    const osfr::RocReport report = osfr::roc(known, unknown);
    if (args.out_path.empty())
        osfr::write_roc(report, std::cout);
    else
        osfr::write_roc(report, args.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-set face recognition experiments on precomputed features"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run a full experiment from a JSON config");
    run->add_option("-c,--config", run_args.config_path, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("-o,--output-dir", run_args.output_dir,
                    "Write report.json, summary.txt and ROC files here (overrides config)");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic feature file");
    synth->add_option("-o,--out", synth_args.out_path, "Output feature file")->required();
    synth->add_option("--identities", synth_args.spec.identities, "Identity count")
        ->check(CLI::PositiveNumber);
    synth->add_option("--samples", synth_args.spec.samples_per_identity, "Samples per identity")
        ->check(CLI::PositiveNumber);
    synth->add_option("--dim", synth_args.spec.dim, "Feature dimension")->check(CLI::PositiveNumber);
    synth->add_option("--spread", synth_args.spec.spread, "Within-identity noise stddev")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", synth_args.spec.seed, "RNG seed");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a model on a gallery feature file");
    train->add_option("-f,--features", train_args.features_path, "Gallery feature file")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("-m,--model", train_args.model_path, "Output model file")->required();
    train->add_option("--algorithm", train_args.algorithm, "Pairing algorithm")
        ->check(CLI::IsMember({"P1", "p1", "P2", "p2"}));
    train->add_option("--z", train_args.z, "Pairing repetition factor")->check(CLI::NonNegativeNumber);
    train->add_option("--hidden", train_args.hidden_dims, "Hidden layer widths (comma separated)")
        ->delimiter(',');
    train->add_option("--margin", train_args.cfg.margin, "Contrastive loss margin");
    train->add_option("--lr", train_args.cfg.learning_rate, "Learning rate");
    train->add_option("--epochs", train_args.cfg.epochs, "Training epochs");
    train->add_option("--batch", train_args.cfg.batch_size, "Minibatch size");
    train->add_option("--seed", train_args.cfg.rng_seed, "RNG seed");

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Score probe samples against a gallery");
    score->add_option("-m,--model", score_args.model_path, "Trained model file")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("-g,--gallery", score_args.gallery_path, "Gallery feature file")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("-p,--probes", score_args.probes_path, "Probe feature file")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("-o,--out", score_args.out_path, "Output scores file (default: stdout)");

    CalibrateArgs calibrate_args;
    auto* calibrate = app.add_subcommand("calibrate", "Pick an accept threshold from a scores file");
    calibrate->add_option("-s,--scores", calibrate_args.scores_path, "Scores file")
        ->required()
        ->check(CLI::ExistingFile);
    calibrate->add_option("--policy", calibrate_args.policy, "eer or fpr")
        ->check(CLI::IsMember({"eer", "fpr"}));
    calibrate->add_option("--alpha", calibrate_args.alpha, "FPR bound for --policy fpr")
        ->check(CLI::Range(0.0, 1.0));

    RocArgs roc_args;
    auto* roc = app.add_subcommand("roc", "Compute ROC and AUC from a scores file");
    roc->add_option("-s,--scores", roc_args.scores_path, "Scores file")
        ->required()
        ->check(CLI::ExistingFile);
    roc->add_option("-o,--out", roc_args.out_path, "Output ROC file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_command(run_args);
        if (*synth) return synth_command(synth_args);
        if (*train) return train_command(train_args);
        if (*score) return score_command(score_args);
        if (*calibrate) return calibrate_command(calibrate_args);
        if (*roc) return roc_command(roc_args);
    } catch (const std::exception& e) {
        std::cerr << "osfr: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
