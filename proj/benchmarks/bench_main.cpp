// Microbenchmarks for the training and evaluation hot paths.

#include <benchmark/benchmark.h>

#include <Eigen/Core>
#include <vector>

#include "osfr/metrics.hpp"
#include "osfr/pairing.hpp"
#include "osfr/recognition.hpp"
#include "osfr/rng.hpp"
#include "osfr/siamese.hpp"

namespace {

osfr::FeatureStore make_store(int identities, int samples, int dim) {
    return osfr::generate_synthetic(identities, samples, dim, 0.1, 1);
}

osfr::ProtocolSplit enroll_all(const osfr::FeatureStore& store) {
    osfr::ProtocolSplit split;
    for (const auto& id : store.identities()) split.known_ids.insert(id);
    for (std::size_t i = 0; i < store.size(); ++i) split.train.push_back(i);
    return split;
}

void bench_forward(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const osfr::SiameseNet net = osfr::init_net({dim, dim, dim / 2}, 3);
    osfr::Rng rng(5);
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x(i) = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(osfr::forward(net, x));
}
BENCHMARK(bench_forward)->Arg(64)->Arg(256)->Arg(1024);

void bench_backward(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const osfr::SiameseNet net = osfr::init_net({dim, dim, dim / 2}, 3);
    osfr::Rng rng(5);
    Eigen::VectorXd x1(dim), x2(dim);
    for (int i = 0; i < dim; ++i) {
        x1(i) = rng.normal();
        x2(i) = rng.normal();
    }
    osfr::NetGradients acc = osfr::NetGradients::zeros_like(net);
    for (auto _ : state) {
        acc.set_zero();
        benchmark::DoNotOptimize(osfr::backward_accumulate(net, x1, x2, 1, 1.0, acc));
    }
}
BENCHMARK(bench_backward)->Arg(64)->Arg(256)->Arg(1024);

void bench_pair_p1(benchmark::State& state) {
    const osfr::FeatureStore store = make_store(static_cast<int>(state.range(0)), 8, 4);
    const osfr::ProtocolSplit split = enroll_all(store);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(osfr::pair_p1(split, store, 2, ++seed));
}
BENCHMARK(bench_pair_p1)->Arg(10)->Arg(40);

void bench_pair_p2(benchmark::State& state) {
    const osfr::FeatureStore store = make_store(static_cast<int>(state.range(0)), 8, 4);
    const osfr::ProtocolSplit split = enroll_all(store);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(osfr::pair_p2(split, store, 2, ++seed));
}
BENCHMARK(bench_pair_p2)->Arg(10)->Arg(40);

void bench_score_probe(benchmark::State& state) {
    const int dim = 64;
    const osfr::FeatureStore store = make_store(20, static_cast<int>(state.range(0)), dim);
    const osfr::SiameseNet net = osfr::init_net({dim, 32, 16}, 4);
    const osfr::GalleryIndex gallery = osfr::build_gallery(net, enroll_all(store), store);
    osfr::Rng rng(9);
    Eigen::VectorXd probe(dim);
    for (int i = 0; i < dim; ++i) probe(i) = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(osfr::score_probe(gallery, net, probe));
}
BENCHMARK(bench_score_probe)->Arg(5)->Arg(50);

void bench_roc(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    osfr::Rng rng(12);
    std::vector<double> known(n), unknown(n);
    for (double& x : known) x = rng.normal();
    for (double& x : unknown) x = rng.normal(0.7, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(osfr::roc(known, unknown));
}
BENCHMARK(bench_roc)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
