#pragma once

#include "ocp/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ocp {

/// N identical unit charges in a periodic cube with a uniform neutralizing background.
///
/// Reduced units: lengths in Wigner-Seitz radii (a = 1), so the box edge satisfies
/// L^3 = (4 pi / 3) N. Velocities are in thermal units sqrt(k_B T / m). Positions are
/// wrapped into [0, L) on every write.
class ParticleSystem {
public:
    ParticleSystem() = default;
    explicit ParticleSystem(std::size_t count, std::uint64_t seed = 0);

    static double box_length_for(std::size_t count);

    std::size_t size() const noexcept { return positions_.size(); }
    double box_length() const noexcept { return box_length_; }
    double volume() const noexcept { return box_length_ * box_length_ * box_length_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const Vec3> positions() const noexcept { return positions_; }
    std::span<const Vec3> velocities() const noexcept { return velocities_; }
    std::span<Vec3> velocities() noexcept { return velocities_; }

    const Vec3& position(std::size_t i) const { return positions_[i]; }
    const Vec3& velocity(std::size_t i) const { return velocities_[i]; }

    void set_position(std::size_t i, const Vec3& r) { positions_[i] = wrap(r); }
    void set_velocity(std::size_t i, const Vec3& v) { velocities_[i] = v; }
    void set_velocities(std::span<const Vec3> v);

    /// Maps any point into the primary cell [0, L)^3.
    Vec3 wrap(const Vec3& r) const noexcept;
    /// Minimum-image displacement.
    Vec3 minimum_image(Vec3 d) const noexcept;

    friend bool operator==(const ParticleSystem&, const ParticleSystem&) = default;

private:
    double box_length_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<Vec3> positions_;
    std::vector<Vec3> velocities_;
};

/// Uniformly random positions, zero velocities.
ParticleSystem random_configuration(std::size_t count, std::uint64_t seed);

/// Simple cubic lattice with k^3 sites, first site at the origin.
ParticleSystem simple_cubic_lattice(std::size_t sites_per_edge);

/// Body-centred cubic lattice with 2 m^3 sites.
ParticleSystem bcc_lattice(std::size_t cells_per_edge);

/// Writes the text format:
///   ocp v1 N L seed
///   x y z vx vy vz      (N lines, 17 significant digits)
void write_ocp(std::ostream& out, const ParticleSystem& sys);
ParticleSystem read_ocp(std::istream& in);

} // namespace ocp
