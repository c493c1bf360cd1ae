#include "ocp/direct_sum.hpp"
#include "ocp/errors.hpp"
#include "ocp/ewald.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace ocp;

namespace {

// Madelung energies per particle of the OCP lattices in units e^2 / (4 pi eps0 a).
constexpr double kMadelungBcc = -0.895929255682;
constexpr double kMadelungSimpleCubic = -0.880059440;

double rms_difference(const std::vector<Vec3>& a, const std::vector<Vec3>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += norm2(a[i] - b[i]);
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

EwaldConfig tuned_for(const ParticleSystem& sys, double target = 1e-5)
{
    return EwaldConfig::tuned(sys.box_length(), sys.size(), target);
}

} // namespace

TEST_CASE("close pair follows the Coulomb law")
{
    ParticleSystem sys(2);
    const double box = sys.box_length();
    const double r = 0.02 * box;
    const Vec3 c{0.5 * box, 0.5 * box, 0.5 * box};
    sys.set_position(0, c - Vec3{0.5 * r, 0.0, 0.0});
    sys.set_position(1, c + Vec3{0.5 * r, 0.0, 0.0});
    const std::vector<Vec3> e = ewald_field(sys, tuned_for(sys));
    const double coulomb = 1.0 / (r * r);
    CHECK(std::abs(e[0].x + coulomb) / coulomb < 1e-4);
    CHECK(std::abs(e[1].x - coulomb) / coulomb < 1e-4);
    CHECK(std::abs(e[0].y) / coulomb < 1e-4);
    CHECK(std::abs(e[1].z) / coulomb < 1e-4);
}

TEST_CASE("lattices carry no field")
{
    for (const ParticleSystem& sys : {simple_cubic_lattice(4), bcc_lattice(3)}) {
        const EwaldConfig cfg = tuned_for(sys);
        for (const Vec3& e : ewald_field(sys, cfg)) {
            CHECK(norm(e) < cfg.target_rms_error);
        }
    }
}

TEST_CASE("Madelung energies")
{
    const ParticleSystem bcc = bcc_lattice(4);
    CHECK(std::abs(ewald_energy(bcc, tuned_for(bcc)) - kMadelungBcc) < 1e-5);
    const ParticleSystem sc = simple_cubic_lattice(4);
    CHECK(std::abs(ewald_energy(sc, tuned_for(sc)) - kMadelungSimpleCubic) < 1e-5);
}

TEST_CASE("energy is translation invariant")
{
    const ParticleSystem sys = random_configuration(64, 11);
    const EwaldConfig cfg = tuned_for(sys);
    ParticleSystem moved = sys;
    const Vec3 shift{0.37, -1.21, 2.9};
    for (std::size_t i = 0; i < sys.size(); ++i) {
        moved.set_position(i, sys.position(i) + shift);
    }
    CHECK(std::abs(ewald_energy(sys, cfg) - ewald_energy(moved, cfg)) < 1e-10);
}

TEST_CASE("field matches the brute-force image sum")
{
    const ParticleSystem sys = random_configuration(64, 7);
    const std::vector<Vec3> ewald = ewald_field(sys, tuned_for(sys));
    const std::vector<Vec3> direct = direct_sum_field(sys, 20);
    CHECK(rms_difference(ewald, direct) < 1e-5);
}

TEST_CASE("energy differences match the brute-force image sum")
{
    const ParticleSystem a = random_configuration(64, 7);
    const ParticleSystem b = random_configuration(64, 8);
    const ParticleSystem lattice = simple_cubic_lattice(4);
    const EwaldConfig cfg = tuned_for(a);
    const double da = direct_sum_configurational_energy(a, 20);
    const double db = direct_sum_configurational_energy(b, 20);
    const double dl = direct_sum_configurational_energy(lattice, 20);
    const double ea = ewald_energy(a, cfg);
    const double eb = ewald_energy(b, cfg);
    const double el = ewald_energy(lattice, cfg);
    CHECK(std::abs((ea - eb) - (da - db)) < 1e-5 * std::abs(ea));
    CHECK(std::abs((ea - el) - (da - dl)) < 1e-5 * std::abs(ea));
    CHECK(el == doctest::Approx(kMadelungSimpleCubic).epsilon(1e-5));
}

TEST_CASE("brute-force image sum has converged")
{
    const ParticleSystem sys = random_configuration(32, 3);
    CHECK(rms_difference(direct_sum_field(sys, 20), direct_sum_field(sys, 24)) < 1e-6);
}

TEST_CASE("net field vanishes")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const ParticleSystem sys = random_configuration(100, seed);
        const EwaldConfig cfg = tuned_for(sys);
        Vec3 total;
        for (const Vec3& e : ewald_field(sys, cfg)) {
            total += e;
        }
        CHECK(norm(total) < static_cast<double>(sys.size()) * cfg.target_rms_error);
    }
}

TEST_CASE("result does not depend on the splitting parameter")
{
    const ParticleSystem sys = random_configuration(64, 5);
    const EwaldConfig base = tuned_for(sys);
    const EwaldConfig sharper =
        EwaldConfig::tuned(sys.box_length(), sys.size(), 1e-5, 1.5 * base.splitting_alpha);
    CHECK(sharper.real_cutoff < base.real_cutoff);
    CHECK(rms_difference(ewald_field(sys, base), ewald_field(sys, sharper)) < 2e-5);
}

TEST_CASE("field is minus the energy gradient")
{
    const ParticleSystem sys = random_configuration(32, 9);
    const EwaldConfig cfg = tuned_for(sys);
    const std::vector<Vec3> e = ewald_field(sys, cfg);
    const double n = static_cast<double>(sys.size());
    const double h = 1e-5;
    for (std::size_t i : {0u, 13u, 31u}) {
        Vec3 grad;
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 step;
            (axis == 0 ? step.x : axis == 1 ? step.y : step.z) = h;
            ParticleSystem plus = sys;
            ParticleSystem minus = sys;
            plus.set_position(i, sys.position(i) + step);
            minus.set_position(i, sys.position(i) - step);
            const double d = n * (ewald_energy(plus, cfg) - ewald_energy(minus, cfg)) / (2.0 * h);
            (axis == 0 ? grad.x : axis == 1 ? grad.y : grad.z) = d;
        }
        CHECK(norm(e[i] + grad) < 1e-4 * norm(e[i]));
    }
}

TEST_CASE("permuting particles permutes fields")
{
    const ParticleSystem sys = random_configuration(40, 4);
    std::vector<std::size_t> perm(sys.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(17);
    std::shuffle(perm.begin(), perm.end(), rng);
    ParticleSystem shuffled = sys;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        shuffled.set_position(i, sys.position(perm[i]));
    }
    const EwaldConfig cfg = tuned_for(sys);
    const std::vector<Vec3> a = ewald_field(sys, cfg);
    const std::vector<Vec3> b = ewald_field(shuffled, cfg);
    for (std::size_t i = 0; i < sys.size(); ++i) {
        CHECK(norm(b[i] - a[perm[i]]) < 1e-12 * (1.0 + norm(a[perm[i]])));
    }
}

TEST_CASE("repeated evaluation is bit-identical")
{
    const ParticleSystem sys = random_configuration(64, 21);
    const EwaldSummation ewald(sys.box_length(), sys.size(), tuned_for(sys));
    const FieldEnergy first = ewald.evaluate(sys.positions());
    const FieldEnergy second = ewald.evaluate(sys.positions());
    CHECK(first.field == second.field);
    CHECK(first.energy_per_particle == second.energy_per_particle);
}

TEST_CASE("Ewald configuration validation")
{
    const double box = ParticleSystem::box_length_for(64);
    const EwaldConfig cfg = EwaldConfig::tuned(box, 64);
    CHECK_NOTHROW(cfg.validate(box, 64));
    CHECK(cfg.real_cutoff <= 0.5 * box);
    CHECK(cfg.real_space_error(box, 64) < 0.5 * cfg.target_rms_error);
    CHECK(cfg.kspace_error(box, 64) < 0.5 * cfg.target_rms_error);

    EwaldConfig too_long = cfg;
    too_long.real_cutoff = 0.6 * box;
    CHECK_THROWS_AS(too_long.validate(box, 64), ConfigError);

    EwaldConfig too_few_k = cfg;
    too_few_k.kspace_cutoff = 2;
    CHECK_THROWS_AS(too_few_k.validate(box, 64), ConfigError);

    EwaldConfig too_many_k = cfg;
    too_many_k.kspace_cutoff = 65;
    CHECK_THROWS_AS(too_many_k.validate(box, 64), ConfigError);

    CHECK_THROWS_AS(EwaldSummation(box, 64, too_few_k), ConfigError);
}

TEST_CASE("brute-force oracle guards and symmetry")
{
    ParticleSystem pair(2);
    const double box = pair.box_length();
    pair.set_position(0, {0.3 * box, 0.5 * box, 0.5 * box});
    pair.set_position(1, {0.7 * box, 0.5 * box, 0.5 * box});
    const std::vector<Vec3> e = direct_sum_field(pair, 6);
    CHECK(norm(e[0] + e[1]) < 1e-12);
    CHECK_THROWS_AS(direct_sum_field(random_configuration(257, 1), 1), InputError);
    CHECK_THROWS_AS(direct_sum_field(pair, 0), InputError);
}

TEST_CASE("uniform cube integrals")
{
    // Far from the cube the field and potential approach those of a point charge.
    const Vec3 p{40.0, 3.0, -2.0};
    const Vec3 centre{0.5, 0.5, 0.5};
    const Vec3 d = p - centre;
    const double r = norm(d);
    CHECK(uniform_cube_potential({0.0, 0.0, 0.0}, 1.0, p) == doctest::Approx(1.0 / r).epsilon(1e-6));
    const Vec3 f = uniform_cube_field({0.0, 0.0, 0.0}, 1.0, p);
    CHECK(norm(f - d / (r * r * r)) < 1e-6 * norm(f));
}
