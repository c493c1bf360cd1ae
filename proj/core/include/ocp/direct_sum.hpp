#pragma once

#include "ocp/particle_system.hpp"
#include "ocp/vec3.hpp"

#include <cstddef>
#include <vector>

namespace ocp {

/// Largest system the brute-force image sums accept.
inline constexpr std::size_t kDirectSumMaxParticles = 256;

/// Field of a unit-density cube [lo, lo + edge)^3 at p: integral of (p - s) / |p - s|^3.
Vec3 uniform_cube_field(const Vec3& lo, double edge, const Vec3& p);
/// Potential of the same cube: integral of 1 / |p - s|.
double uniform_cube_potential(const Vec3& lo, double edge, const Vec3& p);

/// Brute-force periodic microfield, independent of Ewald splitting.
///
/// Every image cell holds the N point charges plus a uniformly charged background
/// cube centred on their centroid, so it is neutral and dipole-free. Cells with
/// |n| <= image_shells are summed in spherical order; the result converges to the
/// conducting-boundary (Ewald) field. Test oracle; throws InputError above
/// kDirectSumMaxParticles or for image_shells < 1.
std::vector<Vec3> direct_sum_field(const ParticleSystem& sys, int image_shells);

/// Brute-force total potential energy per particle, up to an additive constant that
/// depends only on (N, image_shells): the background-background self energy.
/// Differences between configurations of equal N are physical.
double direct_sum_configurational_energy(const ParticleSystem& sys, int image_shells);

} // namespace ocp
