#include "ocp/particle_system.hpp"

#include "ocp/errors.hpp"
#include "ocp/seeding.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace ocp {

namespace {

double wrap_coordinate(double x, double box) noexcept
{
    double w = x - box * std::floor(x / box);
    // floor can leave w == box when x is a tiny negative number.
    if (w >= box) {
        w -= box;
    }
    if (w < 0.0) {
        w = 0.0;
    }
    return w;
}

double image_coordinate(double d, double box) noexcept
{
    return d - box * std::nearbyint(d / box);
}

} // namespace

ParticleSystem::ParticleSystem(std::size_t count, std::uint64_t seed)
    : box_length_(box_length_for(count)),
      seed_(seed),
      positions_(count),
      velocities_(count)
{}

double ParticleSystem::box_length_for(std::size_t count)
{
    return std::cbrt(4.0 * std::numbers::pi / 3.0 * static_cast<double>(count));
}

void ParticleSystem::set_velocities(std::span<const Vec3> v)
{
    if (v.size() != velocities_.size()) {
        throw InputError("velocity array has " + std::to_string(v.size()) +
                         " entries for a system of " + std::to_string(size()));
    }
    velocities_.assign(v.begin(), v.end());
}

Vec3 ParticleSystem::wrap(const Vec3& r) const noexcept
{
    return {wrap_coordinate(r.x, box_length_), wrap_coordinate(r.y, box_length_),
            wrap_coordinate(r.z, box_length_)};
}

Vec3 ParticleSystem::minimum_image(Vec3 d) const noexcept
{
    return {image_coordinate(d.x, box_length_), image_coordinate(d.y, box_length_),
            image_coordinate(d.z, box_length_)};
}

ParticleSystem random_configuration(std::size_t count, std::uint64_t seed)
{
    ParticleSystem sys(count, seed);
    auto rng = make_engine(seed, Stream::initial_layout);
    std::uniform_real_distribution<double> uniform(0.0, sys.box_length());
    for (std::size_t i = 0; i < count; ++i) {
        const double x = uniform(rng);
        const double y = uniform(rng);
        const double z = uniform(rng);
        sys.set_position(i, {x, y, z});
    }
    return sys;
}

ParticleSystem simple_cubic_lattice(std::size_t sites_per_edge)
{
    const std::size_t k = sites_per_edge;
    ParticleSystem sys(k * k * k);
    const double spacing = sys.box_length() / static_cast<double>(k);
    std::size_t i = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c) {
                sys.set_position(i++, {spacing * static_cast<double>(a),
                                       spacing * static_cast<double>(b),
                                       spacing * static_cast<double>(c)});
            }
        }
    }
    return sys;
}

ParticleSystem bcc_lattice(std::size_t cells_per_edge)
{
    const std::size_t m = cells_per_edge;
    ParticleSystem sys(2 * m * m * m);
    const double spacing = sys.box_length() / static_cast<double>(m);
    std::size_t i = 0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            for (std::size_t c = 0; c < m; ++c) {
                const Vec3 corner{spacing * static_cast<double>(a),
                                  spacing * static_cast<double>(b),
                                  spacing * static_cast<double>(c)};
                sys.set_position(i++, corner);
                sys.set_position(i++, corner + Vec3{0.5, 0.5, 0.5} * spacing);
            }
        }
    }
    return sys;
}

void write_ocp(std::ostream& out, const ParticleSystem& sys)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "ocp v1 %zu %.17g %llu\n", sys.size(), sys.box_length(),
                  static_cast<unsigned long long>(sys.seed()));
    out << buf;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const Vec3& r = sys.position(i);
        const Vec3& v = sys.velocity(i);
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g\n", r.x, r.y, r.z,
                      v.x, v.y, v.z);
        out << buf;
    }
}

ParticleSystem read_ocp(std::istream& in)
{
    std::string header;
    if (!std::getline(in, header)) {
        throw InputError("ocp file is empty");
    }
    std::istringstream hs(header);
    std::string magic, version;
    std::size_t count = 0;
    double box = 0.0;
    unsigned long long seed = 0;
    if (!(hs >> magic >> version >> count >> box >> seed) || magic != "ocp" ||
        version != "v1") {
        throw InputError("bad ocp header: '" + header + "'");
    }
    ParticleSystem sys(count, seed);
    if (std::abs(box - sys.box_length()) > 1e-12 * sys.box_length()) {
        throw InputError("ocp header box length " + std::to_string(box) +
                         " is inconsistent with N = " + std::to_string(count));
    }
    std::string line;
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
            throw InputError("ocp file truncated at particle " + std::to_string(i));
        }
        std::istringstream ls(line);
        Vec3 r, v;
        if (!(ls >> r.x >> r.y >> r.z >> v.x >> v.y >> v.z)) {
            throw InputError("malformed ocp line " + std::to_string(i + 2) + ": '" + line + "'");
        }
        sys.set_position(i, r);
        sys.set_velocity(i, v);
    }
    return sys;
}

} // namespace ocp
