#pragma once

#include "ocp/ewald.hpp"
#include "ocp/particle_system.hpp"
#include "ocp/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace ocp {

/// Velocity rescaling to a target temperature every `interval` steps.
struct Thermostat {
    std::size_t interval = 10;
    double target_temperature = 1.0;
};

enum class FieldModel {
    ewald, ///< periodic OCP microfield
    zero, ///< free gyration
    uniform, ///< constant acceleration on every particle (test hook)
};

/// Reduced dynamics: time in 1/omega_p, lengths in a, velocities in sqrt(k_B T / m).
/// In these units
///     dx/dt = v / sqrt(3 Gamma),   dv/dt = beta v x z + sqrt(Gamma / 3) E,
/// with E the reduced microfield; the product sqrt(Gamma / 3) E is the acceleration.
struct IntegratorConfig {
    double dt = 0.05;
    std::size_t steps = 10000;
    std::size_t record_stride = 1;
    double beta = 1.0;
    double gamma = 0.1;
    std::optional<Thermostat> thermostat;
    FieldModel field_model = FieldModel::ewald;
    Vec3 uniform_acceleration; ///< used by FieldModel::uniform
    double ewald_target = 1e-5;

    /// min(0.05, 0.05 / beta, 0.02 Gamma^(3/2)). The last term resolves close
    /// collisions, whose duration scales as Gamma^(3/2) in these units; the energy error
    /// peaks during the closest collision of a run and falls as dt^2.
    static double default_dt(double beta, double gamma);

    /// Throws ConfigError unless dt <= 0.1 min(1, 1/beta), stride >= 1 divides steps,
    /// beta >= 0 and gamma > 0.
    void validate() const;
};

/// Accelerations and potential energy (in k_B T) for a configuration.
struct ForceEvaluation {
    std::vector<Vec3> acceleration;
    double potential_energy = 0.0;
};

/// Evaluates the configured field model for positions of a fixed system shape.
class ForceField {
public:
    ForceField(const IntegratorConfig& cfg, double box_length, std::size_t count);

    void evaluate(std::span<const Vec3> positions, ForceEvaluation& out) const;

private:
    FieldModel model_;
    Vec3 uniform_;
    double gamma_;
    std::optional<EwaldSummation> ewald_;
};

/// One synchronous time-symmetric step:
///   half kick, half drift, exact rotation by -beta dt about z, half drift,
///   field update at the new positions, half kick.
/// `forces` holds the accelerations at the current positions on entry and at the new
/// positions on exit. Positions are wrapped into the box.
void boris_step(ParticleSystem& sys, const IntegratorConfig& cfg, const ForceField& field,
                ForceEvaluation& forces);

/// Per-particle series from a run. Transverse field is stored as an acceleration
/// (sqrt(Gamma / 3) E_perp), so dL/dt = 2 v_perp . E_perp / beta holds in these units.
struct TrajectoryMetadata {
    double beta = 0.0;
    double gamma = 0.0;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::size_t record_stride = 1;
};

struct TrajectoryRecord {
    TrajectoryMetadata meta;
    std::vector<double> times;
    std::vector<Vec2> vperp; ///< record-major: [record * count + particle]
    std::vector<Vec2> eperp;
    std::vector<double> kinetic_total; ///< sum of v^2 / 2, in k_B T
    std::vector<double> potential_total; ///< Gamma * total reduced potential, in k_B T

    std::size_t records() const noexcept { return times.size(); }
    std::size_t count() const noexcept { return meta.count; }
    const Vec2& v(std::size_t record, std::size_t particle) const
    {
        return vperp[record * meta.count + particle];
    }
    const Vec2& e(std::size_t record, std::size_t particle) const
    {
        return eperp[record * meta.count + particle];
    }
};

struct RunResult {
    TrajectoryRecord record;
    ParticleSystem final_state;
    double energy_drift = 0.0; ///< max over steps of |H - H0| / |H0|
    bool drift_flag = false; ///< energy_drift above kEnergyDriftLimit
};

struct EquilibrationResult {
    ParticleSystem state;
    std::vector<double> temperature_history; ///< kinetic temperature before each rescale
};

inline constexpr double kEnergyDriftLimit = 1e-4;

/// Kinetic temperature sum v^2 / (3 N).
double kinetic_temperature(std::span<const Vec3> velocities);

/// Thermostatted run; requires cfg.thermostat.
EquilibrationResult equilibrate(const ParticleSystem& sys, const IntegratorConfig& cfg);

/// Energy-conserving run; requires the thermostat to be off.
RunResult run_nve(const ParticleSystem& sys, const IntegratorConfig& cfg);

/// Writes `csv_path` with header
///   t,particle,vperp_x,vperp_y,Eperp_x,Eperp_y,KE_total,PE_total
/// and the metadata to the same path with extension .json.
void save_trajectory(const TrajectoryRecord& rec, const std::filesystem::path& csv_path);
TrajectoryRecord load_trajectory(const std::filesystem::path& csv_path);

} // namespace ocp
