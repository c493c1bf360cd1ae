#pragma once

#include "ocp/dynamics.hpp"
#include "ocp/particle_system.hpp"
#include "ocp/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ocp {

/// L = v_perp^2 / beta (m = e = 1, B mapped to beta).
double angular_momentum_L(Vec2 vperp, double beta);
/// dL/dt = 2 v_perp . E_perp / beta, with E_perp an acceleration.
double L_dot(Vec2 vperp, Vec2 eperp, double beta);

/// Equally spaced samples of one scalar per particle, particle-major.
struct ParticleSeries {
    std::size_t particles = 0;
    std::size_t samples = 0;
    double interval = 1.0; ///< time between samples
    std::vector<double> values; ///< [particle * samples + sample]

    double at(std::size_t particle, std::size_t sample) const
    {
        return values[particle * samples + sample];
    }
};

/// L or dL/dt of every particle at every record.
ParticleSeries series_L(const TrajectoryRecord& traj);
ParticleSeries series_L_dot(const TrajectoryRecord& traj);

struct CorrelationResult {
    double beta = 0.0;
    std::vector<double> lags; ///< reduced time
    std::vector<double> normalized_correlation; ///< C(t) / C(0)
    std::vector<double> stderr_normalized; ///< bootstrap over particles
    double sigma2_L = 0.0;
    double sigma2_Ldot = 0.0;
    double epsilon_measured = 0.0;
    std::optional<double> decorrelation_time;
    std::optional<double> gyroperiods_to_decorrelate;
};

struct AutocorrelationOptions {
    std::size_t bootstrap_replicates = 200;
    std::uint64_t seed = 0;
};

/// C(t) = <L(s + t) L(s)> - <L>^2 averaged over time origins s and particles, divided by
/// C(0). Standard errors resample whole particles. Throws InputError for series
/// shorter than two samples, max_lag beyond half the span, or zero variance.
CorrelationResult autocorrelation(const ParticleSeries& series, double max_lag,
                                  const AutocorrelationOptions& opts = {});

struct EpsilonEstimate {
    double sigma2_L = 0.0;
    double sigma2_Ldot = 0.0;
    double epsilon_ratio = 0.0; ///< sigma_Ldot / (beta sigma_L)
    double epsilon_product = 0.0; ///< (2 / beta) sigma_{v.E} / sigma_{v^2}
    /// (2 / beta) sqrt(sigma2_vperp sigma2_Eperp / 2) / sigma_{v^2}; equal to the others when
    /// v_perp and E_perp are independent and isotropic.
    double epsilon_chain = 0.0;
    double sigma2_vperp = 0.0; ///< trace over x, y
    double sigma2_Eperp = 0.0; ///< trace over x, y
};

/// Population standard deviations pooled over particles and records. Requires at least
/// 100 records and a non-zero sigma_L.
EpsilonEstimate epsilon_measured(const TrajectoryRecord& traj);

/// Same estimator on raw samples (v_perp, E_perp pairs); used for synthetic checks.
EpsilonEstimate epsilon_from_samples(std::span<const Vec2> vperp, std::span<const Vec2> eperp,
                                     double beta);

/// First lag where the normalized correlation drops below 1/e, linearly interpolated.
std::optional<double> decorrelation_time(const CorrelationResult& corr);

/// Fills decorrelation_time and gyroperiods_to_decorrelate (= time * beta / 2 pi).
void annotate_decorrelation(CorrelationResult& corr);

/// Correlation of L over a trajectory (max_lag defaults to half the span) with sigma2_Ldot,
/// epsilon and the decorrelation time filled in.
CorrelationResult analyze_trajectory(const TrajectoryRecord& traj,
                                     std::optional<double> max_lag = std::nullopt,
                                     const AutocorrelationOptions& opts = {});

struct BoundReport {
    bool pass = true;
    std::optional<std::size_t> first_violation; ///< lag index
    double worst_margin = 0.0; ///< min over lags after 0 of C - (rhs - tolerance)
    std::vector<double> rhs; ///< 1 - eps^2 (beta t)^2 / 2
};

/// Checks C(t) / C(0) >= 1 - eps^2 (beta t)^2 / 2 - (fixed_tolerance + 3 stderr) at
/// every lag.
BoundReport shorttime_bound_check(const CorrelationResult& corr, double epsilon, double beta,
                                  double fixed_tolerance = 0.0);

struct DivergenceOptions {
    double delta0 = 1e-8;
    double renormalize_time = 1.0; ///< reduced time between renormalizations
    double saturation = 1e-2; ///< separation that triggers a shorter interval
    std::uint64_t seed = 0;
};

struct DivergenceResult {
    double rate = 0.0; ///< mean exponential separation rate, units of omega_p
    std::size_t renormalizations = 0;
    std::size_t interval_steps = 0; ///< final renormalization interval
};

/// Twin-trajectory separation with periodic renormalization. The twin starts displaced
/// in position by delta0 along a random direction; separations are measured in phase
/// space with velocities converted to length per unit time.
DivergenceResult trajectory_divergence(const ParticleSystem& sys, const IntegratorConfig& cfg,
                                       const DivergenceOptions& opts = {});

/// correlation.csv: lag,normalized_C,bound_rhs
void write_correlation_csv(const std::filesystem::path& path, const CorrelationResult& corr,
                           const BoundReport& bound);
/// epsilon.json with the estimator values and the thresholding conventions.
void write_epsilon_json(const std::filesystem::path& path, const CorrelationResult& corr,
                        const EpsilonEstimate& eps);

} // namespace ocp
