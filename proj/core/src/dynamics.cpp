#include "ocp/dynamics.hpp"

#include "ocp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ocp {

namespace {

// The rotation is carried out in extended precision. Rounding a double cos/sin pair
// leaves c^2 + s^2 off 1 by about an ulp, which biases |v_perp| the same way on every
// step; in long double that bias is 2^11 times smaller than the final rounding.
struct Rotation {
    long double c;
    long double s;
};

Rotation unit_rotation(double angle)
{
    const long double a = angle;
    return {std::cos(a), std::sin(a)};
}

double kinetic_energy(std::span<const Vec3> v)
{
    double sum = 0.0;
    for (const Vec3& vi : v) {
        sum += norm2(vi);
    }
    return 0.5 * sum;
}

struct Stepper {
    const IntegratorConfig& cfg;
    Rotation rot;
    double drift_scale; // dt / 2 / sqrt(3 Gamma)

    explicit Stepper(const IntegratorConfig& c)
        : cfg(c),
          // Positive charge in B along +z gyrates clockwise seen from +z.
          rot(unit_rotation(-c.beta * c.dt)),
          drift_scale(0.5 * c.dt / std::sqrt(3.0 * c.gamma))
    {
    }

    void step(ParticleSystem& sys, const ForceField& field, ForceEvaluation& forces) const
    {
        const double half_dt = 0.5 * cfg.dt;
        auto v = sys.velocities();
        const std::size_t n = sys.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 vi = v[i] + forces.acceleration[i] * half_dt;
            Vec3 r = sys.position(i) + vi * drift_scale;
            const auto vx = static_cast<double>(rot.c * vi.x - rot.s * vi.y);
            const auto vy = static_cast<double>(rot.s * vi.x + rot.c * vi.y);
            vi.x = vx;
            vi.y = vy;
            r += vi * drift_scale;
            v[i] = vi;
            sys.set_position(i, r);
        }
        field.evaluate(sys.positions(), forces);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] += forces.acceleration[i] * half_dt;
        }
    }
};

void check_shape(const ParticleSystem& sys)
{
    if (sys.size() == 0) {
        throw InputError("particle system is empty");
    }
}

} // namespace

double IntegratorConfig::default_dt(double beta, double gamma)
{
    double dt = 0.05;
    if (beta > 0.0) {
        dt = std::min(dt, 0.05 / beta);
    }
    if (gamma > 0.0) {
        dt = std::min(dt, 0.02 * gamma * std::sqrt(gamma));
    }
    return dt;
}

void IntegratorConfig::validate() const
{
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ConfigError("gamma must be positive, got " + std::to_string(gamma));
    }
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ConfigError("beta must be non-negative, got " + std::to_string(beta));
    }
    if (!(dt > 0.0)) {
        throw ConfigError("dt must be positive, got " + std::to_string(dt));
    }
    const double limit = 0.1 * (beta > 1.0 ? 1.0 / beta : 1.0);
    if (dt > limit * (1.0 + 1e-12)) {
        throw ConfigError("dt = " + std::to_string(dt) + " exceeds 0.1 min(1, 1/beta) = " +
                          std::to_string(limit));
    }
    if (record_stride < 1 || steps % record_stride != 0) {
        throw ConfigError("record stride " + std::to_string(record_stride) +
                          " must be positive and divide steps = " + std::to_string(steps));
    }
    if (thermostat && (thermostat->interval < 1 || !(thermostat->target_temperature > 0.0))) {
        throw ConfigError("thermostat needs a positive interval and target temperature");
    }
}

ForceField::ForceField(const IntegratorConfig& cfg, double box_length, std::size_t count)
    : model_(cfg.field_model), uniform_(cfg.uniform_acceleration), gamma_(cfg.gamma)
{
    if (model_ == FieldModel::ewald) {
        ewald_.emplace(box_length, count, EwaldConfig::tuned(box_length, count, cfg.ewald_target));
    }
}

void ForceField::evaluate(std::span<const Vec3> positions, ForceEvaluation& out) const
{
    const std::size_t n = positions.size();
    switch (model_) {
    case FieldModel::zero:
        out.acceleration.assign(n, Vec3{});
        out.potential_energy = 0.0;
        return;
    case FieldModel::uniform:
        out.acceleration.assign(n, uniform_);
        out.potential_energy = 0.0;
        return;
    case FieldModel::ewald: {
        FieldEnergy fe = ewald_->evaluate(positions);
        const double scale = std::sqrt(gamma_ / 3.0);
        for (Vec3& e : fe.field) {
            e *= scale;
        }
        out.acceleration = std::move(fe.field);
        out.potential_energy = gamma_ * fe.energy_per_particle * static_cast<double>(n);
        return;
    }
    }
}

void boris_step(ParticleSystem& sys, const IntegratorConfig& cfg, const ForceField& field,
                ForceEvaluation& forces)
{
    if (forces.acceleration.size() != sys.size()) {
        throw InputError("force array has " + std::to_string(forces.acceleration.size()) +
                         " entries for " + std::to_string(sys.size()) + " particles");
    }
    Stepper(cfg).step(sys, field, forces);
}

double kinetic_temperature(std::span<const Vec3> velocities)
{
    if (velocities.empty()) {
        return 0.0;
    }
    return 2.0 * kinetic_energy(velocities) / (3.0 * static_cast<double>(velocities.size()));
}

EquilibrationResult equilibrate(const ParticleSystem& sys, const IntegratorConfig& cfg)
{
    cfg.validate();
    check_shape(sys);
    if (!cfg.thermostat) {
        throw ConfigError("equilibration requires a thermostat");
    }
    EquilibrationResult out{sys, {}};
    const ForceField field(cfg, sys.box_length(), sys.size());
    const Stepper stepper(cfg);
    ForceEvaluation forces;
    field.evaluate(out.state.positions(), forces);
    for (std::size_t s = 1; s <= cfg.steps; ++s) {
        stepper.step(out.state, field, forces);
        if (s % cfg.thermostat->interval == 0) {
            const double t = kinetic_temperature(out.state.velocities());
            out.temperature_history.push_back(t);
            // A system at rest is left to heat up from its own field.
            if (t > 0.0) {
                const double factor = std::sqrt(cfg.thermostat->target_temperature / t);
                for (Vec3& v : out.state.velocities()) {
                    v *= factor;
                }
            }
        }
    }
    return out;
}

RunResult run_nve(const ParticleSystem& sys, const IntegratorConfig& cfg)
{
    cfg.validate();
    check_shape(sys);
    if (cfg.thermostat) {
        throw ConfigError("energy-conserving run requires the thermostat to be off");
    }
    RunResult out;
    out.final_state = sys;
    ParticleSystem& state = out.final_state;
    const std::size_t n = sys.size();

    TrajectoryRecord& rec = out.record;
    rec.meta = TrajectoryMetadata{cfg.beta, cfg.gamma, n, sys.seed(), cfg.dt, cfg.steps,
                                  cfg.record_stride};
    const std::size_t records = cfg.steps / cfg.record_stride + 1;
    rec.times.reserve(records);
    rec.vperp.reserve(records * n);
    rec.eperp.reserve(records * n);

    const ForceField field(cfg, sys.box_length(), n);
    const Stepper stepper(cfg);
    ForceEvaluation forces;
    field.evaluate(state.positions(), forces);

    const auto record = [&](std::size_t step, double kinetic) {
        rec.times.push_back(static_cast<double>(step) * cfg.dt);
        for (std::size_t i = 0; i < n; ++i) {
            rec.vperp.push_back(transverse(state.velocity(i)));
            rec.eperp.push_back(transverse(forces.acceleration[i]));
        }
        rec.kinetic_total.push_back(kinetic);
        rec.potential_total.push_back(forces.potential_energy);
    };

    double kinetic = kinetic_energy(state.velocities());
    const double h0 = kinetic + forces.potential_energy;
    record(0, kinetic);
    double drift = 0.0;
    for (std::size_t s = 1; s <= cfg.steps; ++s) {
        stepper.step(state, field, forces);
        kinetic = kinetic_energy(state.velocities());
        const double h = kinetic + forces.potential_energy;
        if (h0 != 0.0) {
            drift = std::max(drift, std::abs(h - h0) / std::abs(h0));
        } else {
            drift = std::max(drift, std::abs(h - h0));
        }
        if (s % cfg.record_stride == 0) {
            record(s, kinetic);
        }
    }
    out.energy_drift = drift;
    out.drift_flag = drift > kEnergyDriftLimit;
    return out;
}

} // namespace ocp
