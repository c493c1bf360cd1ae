#include "ocp/dynamics.hpp"
#include "ocp/ewald.hpp"
#include "ocp/particle_system.hpp"
#include "ocp/sampler.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_EwaldEvaluate(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const ocp::ParticleSystem sys = ocp::random_configuration(n, 1);
    const ocp::EwaldSummation ewald(sys.box_length(), n,
                                    ocp::EwaldConfig::tuned(sys.box_length(), n));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ewald.evaluate(sys.positions()));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EwaldEvaluate)->Arg(64)->Arg(128)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_MetropolisSweep(benchmark::State& state)
{
    ocp::MetropolisConfig cfg;
    cfg.gamma = 0.1;
    cfg.count = static_cast<std::size_t>(state.range(0));
    cfg.sweeps = 50;
    cfg.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ocp::metropolis_sample(cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.sweeps));
}
BENCHMARK(BM_MetropolisSweep)->Arg(128)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_BorisStep(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    ocp::IntegratorConfig cfg;
    cfg.beta = 1.0;
    cfg.gamma = 0.1;
    cfg.dt = ocp::IntegratorConfig::default_dt(cfg.beta, cfg.gamma);
    ocp::ParticleSystem sys = ocp::random_configuration(n, 2);
    sys.set_velocities(ocp::sample_velocities(n, 2));
    const ocp::ForceField field(cfg, sys.box_length(), n);
    ocp::ForceEvaluation forces;
    field.evaluate(sys.positions(), forces);
    for (auto _ : state) {
        ocp::boris_step(sys, cfg, field, forces);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BorisStep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
