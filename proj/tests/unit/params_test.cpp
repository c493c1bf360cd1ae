#include "ocp/errors.hpp"
#include "ocp/params.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ocp;

namespace {

// Independent oracle: the same quantities written out from the CODATA-2018 values.
constexpr double kE = 1.602176634e-19;
constexpr double kMe = 9.1093837015e-31;
constexpr double kEps0 = 8.8541878128e-12;
constexpr double kKb = 1.380649e-23;

double oracle_omega_c(double b) { return kE * b / kMe; }
double oracle_omega_p(double n) { return std::sqrt(n * kE * kE / (kEps0 * kMe)); }

bool same_digits(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

} // namespace

TEST_CASE("cyclotron frequency")
{
    CHECK(cyclotron_frequency(1.0) == doctest::Approx(1.75882e11).epsilon(1e6 / 1.75882e11));
    CHECK(cyclotron_frequency(1.0) == doctest::Approx(oracle_omega_c(1.0)).epsilon(1e-14));
    CHECK(cyclotron_frequency(0.5) == cyclotron_frequency(1.0) / 2.0);
    CHECK(cyclotron_frequency(5.0) == doctest::Approx(8.79410e11).epsilon(1e-5));
    CHECK_THROWS_AS(cyclotron_frequency(0.0), DomainError);
    CHECK_THROWS_AS(cyclotron_frequency(-1.0), DomainError);
}

TEST_CASE("plasma frequency")
{
    // sqrt(n e^2 / (eps0 m)) at 1e19 is 1.78399e11; 1.7837e11 would contradict beta = 0.9859.
    CHECK(std::abs(plasma_frequency(1e19) - 1.7840e11) < 1e7);
    CHECK(plasma_frequency(1e19) == doctest::Approx(oracle_omega_p(1e19)).epsilon(1e-14));
    CHECK(plasma_frequency(4e19) == doctest::Approx(2.0 * plasma_frequency(1e19)).epsilon(1e-15));
    CHECK(std::abs(plasma_frequency(1.458e19) - 2.1542e11) < 1e7);
    CHECK_THROWS_AS(plasma_frequency(0.0), DomainError);
}

TEST_CASE("epsilon from SI parameters")
{
    const double eps_at_limit = epsilon_macroscopic(PlasmaParams::make(1.458e19, 1e7, 1.0));
    CHECK(eps_at_limit == doctest::Approx(1.0).epsilon(1e-3));

    const double eps = epsilon_macroscopic(PlasmaParams::make(1e19, 1e7, 1.0));
    const double oracle = std::sqrt(2.0 / 3.0) * oracle_omega_p(1e19) / oracle_omega_c(1.0);
    CHECK(std::abs(eps - 0.828) < 1e-3);
    CHECK(eps == doctest::Approx(oracle).epsilon(1e-12));

    CHECK(epsilon_macroscopic(PlasmaParams::make(1e-10, 1e7, 1.0)) < 1e-14);
}

TEST_CASE("temperature cancels in epsilon")
{
    for (double n : {1e17, 3e19, 2e21}) {
        for (double b : {0.3, 2.0, 7.5}) {
            const double lo = epsilon_macroscopic(PlasmaParams::make(n, 1e5, b));
            const double hi = epsilon_macroscopic(PlasmaParams::make(n, 1e7, b));
            CHECK(same_digits(lo, hi, 1e-12));
        }
    }
}

TEST_CASE("epsilon from beta")
{
    const double b0 = std::sqrt(2.0 / 3.0);
    CHECK(epsilon_from_beta(b0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(epsilon_from_beta(2.0 * b0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(epsilon_from_beta(0.9859) - 0.828) < 1e-3);
    CHECK_THROWS_AS(epsilon_from_beta(0.0), DomainError);
    CHECK_THROWS_AS(epsilon_from_beta(-2.0), DomainError);

    for (double n : {1e18, 1e19, 5e20}) {
        for (double b : {0.5, 1.0, 4.0}) {
            const PlasmaParams p = PlasmaParams::make(n, 2e6, b);
            const double via_beta = epsilon_from_beta(to_reduced(p, 128).magnetization_beta);
            CHECK(same_digits(epsilon_macroscopic(p), via_beta, 1e-10));
        }
    }
}

TEST_CASE("density limit")
{
    const double n1 = density_limit(1.0);
    CHECK(n1 == doctest::Approx(1.4580e19).epsilon(1e-3));
    CHECK(n1 == doctest::Approx(1.5 * kEps0 / kMe).epsilon(1e-14));
    CHECK(density_limit(2.0) == 4.0 * n1);
    CHECK(density_limit(5.0) == doctest::Approx(3.645e20).epsilon(1e-3));
    CHECK_THROWS_AS(density_limit(0.0), DomainError);

    for (double b : {0.2, 1.0, 6.0}) {
        const double eps = epsilon_macroscopic(PlasmaParams::make(density_limit(b), 5e6, b));
        CHECK(same_digits(eps, 1.0, 1e-10));
    }
}

TEST_CASE("density limit is a power law of exponent two")
{
    const double x0 = -1.0;
    const double x1 = 0.5;
    const double x2 = 2.0;
    const double y0 = std::log10(density_limit(std::pow(10.0, x0)));
    const double y1 = std::log10(density_limit(std::pow(10.0, x1)));
    const double y2 = std::log10(density_limit(std::pow(10.0, x2)));
    CHECK((y2 - y0) / (x2 - x0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK((y1 - y0) / (x1 - x0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("reduction of a reference state")
{
    const double t = parse_temperature("1keV");
    const ReducedParams r = to_reduced(PlasmaParams::make(1e19, t, 1.0), 128);
    const double a = std::cbrt(3.0 / (4.0 * std::numbers::pi * 1e19));
    CHECK(a == doctest::Approx(2.879e-7).epsilon(1e-3));
    const double gamma = kE * kE / (4.0 * std::numbers::pi * kEps0 * a * kKb * t);
    CHECK(r.coupling_Gamma == doctest::Approx(5.00e-6).epsilon(1e-2));
    CHECK(r.coupling_Gamma == doctest::Approx(gamma).epsilon(1e-12));
    CHECK(r.magnetization_beta == doctest::Approx(0.9859).epsilon(1e-3));
    CHECK(r.particle_count_N == 128);

    const ReducedParams hot = to_reduced(PlasmaParams::make(1e19, 2.0 * t, 1.0), 128);
    CHECK(hot.coupling_Gamma == doctest::Approx(r.coupling_Gamma / 2.0).epsilon(1e-14));
    CHECK(hot.magnetization_beta == r.magnetization_beta);

    const ReducedParams lim = to_reduced(PlasmaParams::make(1.458e19, t, 1.0), 128);
    CHECK(lim.magnetization_beta == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-3));
}

TEST_CASE("SI round trip through reduced units")
{
    for (double n : {1e15, 1e19, 1e23}) {
        for (double t : {1e3, 1e6, 1e9}) {
            for (double b : {0.05, 1.0, 12.0}) {
                const PlasmaParams p = PlasmaParams::make(n, t, b);
                const PlasmaParams q = from_reduced(to_reduced(p, 64), t);
                CHECK(same_digits(q.density_n, n, 1e-12));
                CHECK(same_digits(q.temperature_T, t, 1e-12));
                CHECK(same_digits(q.field_B, b, 1e-12));
            }
        }
    }
}

TEST_CASE("invalid plasma parameters")
{
    CHECK_THROWS_AS(PlasmaParams::make(0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(PlasmaParams::make(1.0, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(PlasmaParams::make(1.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(to_reduced(PlasmaParams::make(1e19, 1e6, 1.0), 1), DomainError);
}

TEST_CASE("temperature parsing")
{
    CHECK(parse_temperature("300K") == 300.0);
    CHECK(parse_temperature("1eV") == doctest::Approx(kE / kKb).epsilon(1e-15));
    CHECK(parse_temperature("1.5keV") == doctest::Approx(1.5e3 * kE / kKb).epsilon(1e-15));
    CHECK(parse_temperature("2MeV") == doctest::Approx(2e6 * kE / kKb).epsilon(1e-15));
    CHECK_THROWS(parse_temperature("300"));
    CHECK_THROWS(parse_temperature("-5eV"));
    CHECK_THROWS(parse_temperature("abcK"));
}

TEST_CASE("constants")
{
    constexpr PhysicalConstants c = kCodata2018;
    CHECK(c.elementary_charge() == kE);
    CHECK(c.electron_mass() == kMe);
    CHECK(c.vacuum_permittivity() == kEps0);
    CHECK(c.boltzmann() == kKb);
}
