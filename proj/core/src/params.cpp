#include "ocp/params.hpp"

#include "ocp/errors.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

namespace ocp {

namespace {

void require_positive(double value, const char* name)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(name) + " must be positive and finite, got " +
                          std::to_string(value));
    }
}

} // namespace

PlasmaParams PlasmaParams::make(double density_n, double temperature_T, double field_B)
{
    require_positive(density_n, "density n");
    require_positive(temperature_T, "temperature T");
    require_positive(field_B, "field B");
    return {density_n, temperature_T, field_B};
}

double parse_temperature(std::string_view text, const PhysicalConstants& c)
{
    while (!text.empty() && text.back() == ' ') {
        text.remove_suffix(1);
    }
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first) {
        throw InputError("temperature '" + std::string(text) + "' does not start with a number");
    }
    std::string_view unit(ptr, static_cast<std::size_t>(last - ptr));
    while (!unit.empty() && unit.front() == ' ') {
        unit.remove_prefix(1);
    }

    double kelvin = 0.0;
    if (unit == "K") {
        kelvin = value;
    } else if (unit == "eV") {
        kelvin = value * c.kelvin_per_ev();
    } else if (unit == "keV") {
        kelvin = value * 1e3 * c.kelvin_per_ev();
    } else if (unit == "MeV") {
        kelvin = value * 1e6 * c.kelvin_per_ev();
    } else {
        throw InputError("temperature '" + std::string(text) +
                         "' needs a unit suffix: K, eV, keV or MeV");
    }
    require_positive(kelvin, "temperature T");
    return kelvin;
}

double cyclotron_frequency(double field_B, const PhysicalConstants& c)
{
    require_positive(field_B, "field B");
    return c.elementary_charge() * field_B / c.electron_mass();
}

double plasma_frequency(double density_n, const PhysicalConstants& c)
{
    require_positive(density_n, "density n");
    const double e = c.elementary_charge();
    return std::sqrt(density_n * e * e / (c.vacuum_permittivity() * c.electron_mass()));
}

double wigner_seitz_radius(double density_n)
{
    require_positive(density_n, "density n");
    return std::cbrt(3.0 / (4.0 * std::numbers::pi * density_n));
}

double epsilon_macroscopic(const PlasmaParams& p, const PhysicalConstants& c)
{
    require_positive(p.density_n, "density n");
    require_positive(p.temperature_T, "temperature T");
    require_positive(p.field_B, "field B");
    // sqrt(2/3) sigma_E / (B v_T) with sigma_E^2 = n k_B T / eps0 and v_T^2 = k_B T / m.
    // Written without T so the cancellation is exact in floating point as well.
    return std::sqrt(2.0 * p.density_n * c.electron_mass() /
                     (3.0 * c.vacuum_permittivity())) /
           p.field_B;
}

double epsilon_from_beta(double beta)
{
    require_positive(beta, "magnetization beta");
    return std::sqrt(2.0 / 3.0) / beta;
}

double density_limit(double field_B, const PhysicalConstants& c)
{
    require_positive(field_B, "field B");
    return 1.5 * c.vacuum_permittivity() / c.electron_mass() * field_B * field_B;
}

ReducedParams to_reduced(const PlasmaParams& p, std::size_t particle_count,
                         const PhysicalConstants& c)
{
    require_positive(p.temperature_T, "temperature T");
    if (particle_count < 2) {
        throw DomainError("particle count N must be at least 2");
    }
    const double a = wigner_seitz_radius(p.density_n);
    const double e = c.elementary_charge();
    const double coulomb_at_a = e * e / (4.0 * std::numbers::pi * c.vacuum_permittivity() * a);
    ReducedParams r;
    r.coupling_Gamma = coulomb_at_a / (c.boltzmann() * p.temperature_T);
    r.magnetization_beta = cyclotron_frequency(p.field_B, c) / plasma_frequency(p.density_n, c);
    r.particle_count_N = particle_count;
    return r;
}

PlasmaParams from_reduced(const ReducedParams& r, double temperature_T,
                          const PhysicalConstants& c)
{
    require_positive(r.coupling_Gamma, "coupling Gamma");
    require_positive(r.magnetization_beta, "magnetization beta");
    require_positive(temperature_T, "temperature T");
    const double e = c.elementary_charge();
    const double a = e * e /
                     (4.0 * std::numbers::pi * c.vacuum_permittivity() * r.coupling_Gamma *
                      c.boltzmann() * temperature_T);
    const double n = 3.0 / (4.0 * std::numbers::pi * a * a * a);
    const double field = r.magnetization_beta * plasma_frequency(n, c) * c.electron_mass() / e;
    return PlasmaParams::make(n, temperature_T, field);
}

} // namespace ocp
