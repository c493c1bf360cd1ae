#pragma once

#include <cstddef>
#include <string_view>

namespace ocp {

/// SI constants used throughout the toolkit (CODATA 2018, exact where defined).
class PhysicalConstants {
public:
    constexpr PhysicalConstants(double elementary_charge, double electron_mass,
                                double vacuum_permittivity, double boltzmann) noexcept
        : elementary_charge_(elementary_charge),
          electron_mass_(electron_mass),
          vacuum_permittivity_(vacuum_permittivity),
          boltzmann_(boltzmann)
    {}

    static constexpr PhysicalConstants codata2018() noexcept
    {
        return {1.602176634e-19, 9.1093837015e-31, 8.8541878128e-12, 1.380649e-23};
    }

    constexpr double elementary_charge() const noexcept { return elementary_charge_; }
    constexpr double electron_mass() const noexcept { return electron_mass_; }
    constexpr double vacuum_permittivity() const noexcept { return vacuum_permittivity_; }
    constexpr double boltzmann() const noexcept { return boltzmann_; }

    /// Kelvin per electronvolt, e/k_B.
    constexpr double kelvin_per_ev() const noexcept { return elementary_charge_ / boltzmann_; }

private:
    double elementary_charge_;
    double electron_mass_;
    double vacuum_permittivity_;
    double boltzmann_;
};

inline constexpr PhysicalConstants kCodata2018 = PhysicalConstants::codata2018();

/// Macroscopic electron state in SI units: density [m^-3], temperature [K], field [T].
struct PlasmaParams {
    double density_n = 0.0;
    double temperature_T = 0.0;
    double field_B = 0.0;

    /// Validating constructor; throws DomainError unless all three are positive.
    static PlasmaParams make(double density_n, double temperature_T, double field_B);
};

/// Dimensionless one-component-plasma state.
struct ReducedParams {
    double coupling_Gamma = 0.0;    ///< e^2 / (4 pi eps0 a k_B T)
    double magnetization_beta = 0.0; ///< omega_c / omega_p
    std::size_t particle_count_N = 0;
};

/// Parses "300K", "5eV", "1.5keV", "2MeV" into kelvin. A unit suffix is mandatory.
double parse_temperature(std::string_view text,
                         const PhysicalConstants& c = kCodata2018);

double cyclotron_frequency(double field_B, const PhysicalConstants& c = kCodata2018);
double plasma_frequency(double density_n, const PhysicalConstants& c = kCodata2018);

/// Wigner-Seitz radius a, with (4 pi / 3) n a^3 = 1.
double wigner_seitz_radius(double density_n);

/// Perturbation parameter at the stochasticity threshold model with the
/// one-component-plasma microfield variance n k_B T / eps0. Temperature cancels.
double epsilon_macroscopic(const PlasmaParams& p, const PhysicalConstants& c = kCodata2018);

/// Same parameter in reduced form, sqrt(2/3) / beta.
double epsilon_from_beta(double beta);

/// Density at which epsilon reaches one: (3/2) (eps0 / m) B^2.
double density_limit(double field_B, const PhysicalConstants& c = kCodata2018);

ReducedParams to_reduced(const PlasmaParams& p, std::size_t particle_count,
                         const PhysicalConstants& c = kCodata2018);

/// Inverse of to_reduced given the temperature that the reduction discarded.
PlasmaParams from_reduced(const ReducedParams& r, double temperature_T,
                          const PhysicalConstants& c = kCodata2018);

} // namespace ocp
