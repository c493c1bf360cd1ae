#pragma once

#include "ocp/dynamics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ocp {

/// Eight values log-spaced over [0.2, 4].
std::vector<double> default_sweep_betas();

/// Production-run template used by SweepConfig: default dt per beta, 30000 steps,
/// every tenth step recorded.
inline IntegratorConfig default_sweep_run()
{
    IntegratorConfig c;
    c.dt = 0.0;
    c.steps = 30000;
    c.record_stride = 10;
    return c;
}

struct SweepConfig {
    double gamma = 0.1;
    std::vector<double> betas;
    std::size_t count = 128;
    /// Template for the production run; dt <= 0 selects IntegratorConfig::default_dt per beta.
    /// beta, gamma and the thermostat are overridden per point.
    IntegratorConfig sim = default_sweep_run();
    std::size_t metropolis_sweeps = 100;
    std::size_t equilibration_steps = 2000;
    std::size_t divergence_steps = 4000;
    /// Each production run is lengthened (never shortened) so that its span covers at
    /// least this many gyroperiods; the correlation window is half the span.
    double min_span_gyroperiods = 4.0;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct SweepRow {
    double beta = 0.0;
    double gamma = 0.0;
    std::size_t count = 0;
    double epsilon_predicted = 0.0; ///< sqrt(2/3) / beta
    double epsilon_measured = 0.0;
    double epsilon_chain = 0.0;
    /// Empty when C(t) stayed above 1/e up to the largest lag.
    std::optional<double> decorrelation_gyroperiods;
    double max_lag_gyroperiods = 0.0; ///< lower bound when not reached
    double divergence_rate = 0.0;
    double energy_drift = 0.0;
    bool energy_drift_flag = false;
    double dt = 0.0;
    std::size_t steps = 0; ///< production steps after lengthening
};

struct SweepResult {
    std::vector<SweepRow> rows; ///< sorted by beta
    std::optional<double> located_threshold_beta;
    bool threshold_uses_lower_bound = false;
    bool decorrelation_monotone = true;
    std::vector<std::string> diagnostics;
};

struct PointRun {
    RunResult run;
    IntegratorConfig sim; ///< resolved production config (dt filled in)
};

/// One point of the pipeline: Metropolis start at cfg.gamma, Maxwellian velocities,
/// thermostatted equilibration, then the energy-conserving production run at `beta`.
/// All randomness derives from `seed`.
PointRun simulate_point(const SweepConfig& cfg, double beta, std::uint64_t seed);

/// Called after each finished point with its row; may run on worker threads.
using SweepProgress = std::function<void(const SweepRow&)>;

/// Simulates every beta (Metropolis start, thermostatted equilibration, energy-conserving
/// run, correlation analysis, twin-trajectory divergence). Point i uses the seed
/// derive_seed(seed, Stream::sweep_point, i) with i the index in ascending beta, so the
/// result does not depend on `jobs`.
SweepResult run_sweep(const SweepConfig& cfg, const SweepProgress& progress = {});

struct ThresholdEstimate {
    std::optional<double> beta;
    bool uses_lower_bound = false; ///< upper bracket was only bounded from below
};

/// Interpolates log(gyroperiods) linearly in beta across the one-gyroperiod level, at the
/// first bracketing pair in ascending beta. Rows that never decorrelated count as
/// ordered when their lower bound already exceeds one gyroperiod and are skipped
/// otherwise.
ThresholdEstimate locate_threshold(const std::vector<SweepRow>& rows);

/// True when the decorrelation gyroperiods (lower bounds for rows that never
/// decorrelated) never decrease with beta.
bool decorrelation_nondecreasing(const std::vector<SweepRow>& rows);

/// sweep.csv: beta,gamma,N,epsilon_predicted,epsilon_measured,decorrelation_gyroperiods,
/// divergence_rate,energy_drift_flag
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
void write_threshold_json(const std::filesystem::path& path, const SweepResult& result);

} // namespace ocp
