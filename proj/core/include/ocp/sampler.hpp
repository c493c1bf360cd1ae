#pragma once

#include "ocp/ewald.hpp"
#include "ocp/particle_system.hpp"
#include "ocp/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ocp {

struct MetropolisConfig {
    double gamma = 0.1;
    std::size_t count = 128;
    std::size_t sweeps = 1000;
    std::uint64_t seed = 0;
    double burn_in_fraction = 0.2;
    double ewald_target = 1e-5;
    /// Fixed stride between recorded configurations; chosen from the burn-in energy
    /// autocorrelation when absent.
    std::optional<std::size_t> record_stride;

    void validate() const;
};

struct SamplingDiagnostics {
    double acceptance_rate = 0.0; ///< over the production phase
    double step_size = 0.0;
    std::size_t burn_in_sweeps = 0;
    std::size_t record_stride = 1;
    std::size_t records = 0;
    std::vector<std::string> warnings;
};

struct SamplingResult {
    ParticleSystem state;
    SamplingDiagnostics diagnostics;
    std::vector<double> recorded_energy; ///< potential energy per particle at each record
};

/// Called with each recorded configuration and its record index.
using RecordCallback = std::function<void(const ParticleSystem&, std::size_t)>;

/// Single-particle Metropolis sampling of exp(-Gamma U) for the periodic OCP.
///
/// The first burn_in_fraction of sweeps is discarded. Its first half tunes the step
/// toward 40-60% acceptance (capped at L/2); its second half sets the record stride
/// to the smallest lag at which the energy autocorrelation drops below 0.1.
SamplingResult metropolis_sample(const MetropolisConfig& cfg, const RecordCallback& on_record = {});

/// Final configuration of metropolis_sample.
ParticleSystem metropolis_positions(double gamma, std::size_t count, std::size_t sweeps,
                                    std::uint64_t seed);

/// I.i.d. standard normal velocity components (thermal units).
std::vector<Vec3> sample_velocities(std::size_t count, std::uint64_t seed);

struct Histogram {
    double upper = 0.0; ///< bins cover [0, upper)
    std::vector<double> density; ///< normalized so sum(density) * width + overflow fraction = 1
    std::size_t overflow = 0;

    double bin_width() const noexcept
    {
        return density.empty() ? 0.0 : upper / static_cast<double>(density.size());
    }
};

struct MicrofieldStats {
    Vec3 mean_field;
    Vec3 stderr_mean;
    double variance_total = 0.0; ///< trace of the field covariance
    double variance_transverse = 0.0; ///< x and y components only
    Histogram histogram; ///< of |E|
    std::size_t sample_count = 0;
    std::size_t config_count = 0;
    double stderr_variance = 0.0;
    std::size_t blocks = 0;
};

/// Streams per-particle microfields from successive configurations.
///
/// Samples are grouped into units (whole configurations once there are at least 16 of
/// them, otherwise sixteen particle groups per configuration) and the standard errors
/// come from contiguous blocks of units.
class MicrofieldAccumulator {
public:
    static constexpr std::size_t kHistogramBins = 40;
    static constexpr std::size_t kMinBlocks = 16;

    /// Without histogram_upper the range is five times the RMS field of the first batch.
    explicit MicrofieldAccumulator(std::optional<double> histogram_upper = std::nullopt);

    void add(std::span<const Vec3> fields);
    MicrofieldStats stats() const;
    std::size_t config_count() const noexcept { return configs_; }

private:
    struct Unit {
        double n = 0.0;
        Vec3 sum;
        Vec3 sum_sq;
    };

    std::optional<double> upper_;
    std::size_t particles_ = 0;
    std::size_t configs_ = 0;
    std::vector<Unit> groups_; ///< kMinBlocks groups per configuration
    std::vector<std::size_t> bins_;
    std::size_t overflow_ = 0;
};

/// Pools microfields over configurations sharing N and L.
MicrofieldStats microfield_stats(std::span<const ParticleSystem> configs, const EwaldConfig& cfg);

struct IlmReport {
    double measured = 0.0;
    double predicted = 0.0;
    double ratio = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Compares variance_total with 3 / Gamma; passes iff |ratio - 1| < max(0.1, 3 stderr / predicted).
IlmReport ilm_check(const MicrofieldStats& stats, double gamma);

struct PairCorrelation {
    std::vector<double> r; ///< bin centres
    std::vector<double> g;
    std::vector<double> stderr_g;
};

/// Radial distribution function up to L/2 averaged over configurations; the per-bin
/// error is the spread over configurations.
PairCorrelation pair_correlation(std::span<const ParticleSystem> configs, std::size_t bins);

} // namespace ocp
