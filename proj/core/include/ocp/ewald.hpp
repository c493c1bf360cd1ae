#pragma once

#include "ocp/particle_system.hpp"
#include "ocp/vec3.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ocp {

/// Ewald splitting parameters in reduced units (a = 1).
struct EwaldConfig {
    double splitting_alpha = 0.0;
    double real_cutoff = 0.0;
    int kspace_cutoff = 0; ///< largest |n| with k = 2 pi n / L
    double target_rms_error = 1e-5;

    /// Picks (alpha, r_c, k_max) so both truncation-error estimates stay below
    /// `target` / 2. Without `alpha`, r_c = L/2 and alpha is solved for; with `alpha`,
    /// r_c is solved for and must fit within L/2.
    static EwaldConfig tuned(double box_length, std::size_t count, double target = 1e-5,
                             std::optional<double> alpha = std::nullopt);

    /// RMS per-particle field error from the real-space cutoff (Kolafa-Perram form).
    double real_space_error(double box_length, std::size_t count) const;
    /// RMS per-particle field error from truncating the reciprocal sum at k_max.
    double kspace_error(double box_length, std::size_t count) const;

    /// Throws ConfigError if r_c > L/2 or either error estimate exceeds the target.
    void validate(double box_length, std::size_t count) const;
};

struct KVector {
    int nx = 0;
    int ny = 0;
    int nz = 0;
    Vec3 k;
    double weight = 0.0; ///< exp(-k^2 / 4 alpha^2) / k^2
};

/// One complex number per stored k vector, split into real and imaginary parts.
struct KSpaceArray {
    std::vector<double> re;
    std::vector<double> im;

    void assign(std::size_t n)
    {
        re.assign(n, 0.0);
        im.assign(n, 0.0);
    }
    std::size_t size() const noexcept { return re.size(); }
};

/// Fields (unit e / 4 pi eps0 a^2) and energy per particle (unit e^2 / 4 pi eps0 a).
struct FieldEnergy {
    std::vector<Vec3> field;
    double energy_per_particle = 0.0;
};

/// Ewald summation for the one-component plasma in a fixed cubic box.
///
/// Only half of reciprocal space is stored; the k = 0 term is dropped because the
/// background cancels it. All loops run in a fixed order so results are
/// bit-reproducible.
class EwaldSummation {
public:
    EwaldSummation(double box_length, std::size_t count, const EwaldConfig& cfg);

    const EwaldConfig& config() const noexcept { return cfg_; }
    double box_length() const noexcept { return box_; }
    std::size_t count() const noexcept { return count_; }
    std::span<const KVector> kvectors() const noexcept { return kvecs_; }

    FieldEnergy evaluate(std::span<const Vec3> positions) const;
    std::vector<Vec3> field(std::span<const Vec3> positions) const;
    double energy_per_particle(std::span<const Vec3> positions) const;

    /// Real-space pair energy erfc(alpha r) / r, zero beyond the cutoff.
    double pair_energy(double r) const noexcept;
    /// Self and background constants of the total energy.
    double constant_energy() const noexcept;

    /// exp(i k . r) for every stored k vector.
    void phases(const Vec3& r, KSpaceArray& out) const;
    /// rho_k = sum_j exp(i k . r_j).
    KSpaceArray structure_factor(std::span<const Vec3> positions) const;
    /// Reciprocal-space part of the total energy for a given structure factor.
    double reciprocal_energy(const KSpaceArray& rho) const;
    /// Change of the reciprocal energy when one particle's phases go old -> new.
    double reciprocal_energy_change(const KSpaceArray& rho, std::span<const double> old_re,
                                    std::span<const double> old_im,
                                    const KSpaceArray& new_phase) const;

    Vec3 minimum_image(Vec3 d) const noexcept;

private:
    void phases_into(const Vec3& r, double* re, double* im) const;

    double box_;
    std::size_t count_;
    EwaldConfig cfg_;
    double volume_;
    std::vector<KVector> kvecs_;
    // kvecs_ is laid out in rows of consecutive nz at fixed (nx, ny).
    struct KRow {
        int ix, iy, iz_begin;
        std::size_t offset, length;
    };
    std::vector<KRow> rows_;
    // Structure-of-arrays copies of kvecs_ for the inner loops.
    std::vector<double> weight_, kx_w_, ky_w_, kz_w_;
};

/// Microfield at every particle.
std::vector<Vec3> ewald_field(const ParticleSystem& sys, const EwaldConfig& cfg);
/// Total potential energy per particle, including self and background terms.
double ewald_energy(const ParticleSystem& sys, const EwaldConfig& cfg);

} // namespace ocp
