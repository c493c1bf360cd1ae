#include "ocp/direct_sum.hpp"

#include "ocp/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace ocp {

namespace {

// coeff * ln(a + r), where rest2 = r^2 - a^2 is passed in to avoid cancellation
// when a is negative.
double coeff_log(double coeff, double a, double r, double rest2)
{
    if (coeff == 0.0) {
        return 0.0;
    }
    if (a >= 0.0) {
        return coeff * std::log(a + r);
    }
    return coeff * std::log(rest2 / (r - a));
}

// d^2 G / dv dw = 1 / sqrt(u^2 + v^2 + w^2)
double face_integral(double u, double v, double w)
{
    const double u2 = u * u, v2 = v * v, w2 = w * w;
    const double r = std::sqrt(u2 + v2 + w2);
    double g = coeff_log(v, w, r, u2 + v2) + coeff_log(w, v, r, u2 + w2);
    if (u != 0.0 && r > 0.0) {
        g -= u * std::atan(v * w / (u * r));
    }
    return g;
}

// d^3 F / du dv dw = 1 / sqrt(u^2 + v^2 + w^2)
double volume_integral(double u, double v, double w)
{
    const double u2 = u * u, v2 = v * v, w2 = w * w;
    const double r = std::sqrt(u2 + v2 + w2);
    double f = coeff_log(v * w, u, r, v2 + w2) + coeff_log(u * w, v, r, u2 + w2) +
               coeff_log(u * v, w, r, u2 + v2);
    if (r > 0.0) {
        if (u != 0.0) {
            f -= 0.5 * u2 * std::atan(v * w / (u * r));
        }
        if (v != 0.0) {
            f -= 0.5 * v2 * std::atan(u * w / (v * r));
        }
        if (w != 0.0) {
            f -= 0.5 * w2 * std::atan(u * v / (w * r));
        }
    }
    return f;
}

void check_size(const ParticleSystem& sys, int image_shells)
{
    if (sys.size() > kDirectSumMaxParticles) {
        throw InputError("direct image sum refuses N = " + std::to_string(sys.size()) +
                         " (limit " + std::to_string(kDirectSumMaxParticles) + ")");
    }
    if (image_shells < 1) {
        throw InputError("direct image sum needs at least one image shell");
    }
}

template <typename Fn>
void for_each_cell(int shells, Fn&& fn)
{
    for (int a = -shells; a <= shells; ++a) {
        for (int b = -shells; b <= shells; ++b) {
            for (int c = -shells; c <= shells; ++c) {
                if (a * a + b * b + c * c <= shells * shells) {
                    fn(a, b, c);
                }
            }
        }
    }
}

// Corner of the background cube centred on the charge centroid. With this
// choice each image cell is neutral and carries no dipole, so the spherical
// sum has no shape term and converges at quadrupole order.
Vec3 background_corner(const ParticleSystem& sys)
{
    Vec3 centroid{};
    for (const Vec3& r : sys.positions()) {
        centroid += r;
    }
    centroid = centroid / static_cast<double>(sys.size());
    const double half = 0.5 * sys.box_length();
    return centroid - Vec3{half, half, half};
}

} // namespace

Vec3 uniform_cube_field(const Vec3& lo, double edge, const Vec3& p)
{
    const std::array<double, 2> ux{lo.x - p.x, lo.x + edge - p.x};
    const std::array<double, 2> uy{lo.y - p.y, lo.y + edge - p.y};
    const std::array<double, 2> uz{lo.z - p.z, lo.z + edge - p.z};
    const std::array<double, 2> sign{-1.0, 1.0};
    Vec3 e{};
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            const double s = sign[j] * sign[k];
            e.x += s * (face_integral(ux[1], uy[j], uz[k]) - face_integral(ux[0], uy[j], uz[k]));
            e.y += s * (face_integral(uy[1], ux[j], uz[k]) - face_integral(uy[0], ux[j], uz[k]));
            e.z += s * (face_integral(uz[1], ux[j], uy[k]) - face_integral(uz[0], ux[j], uy[k]));
        }
    }
    return e;
}

double uniform_cube_potential(const Vec3& lo, double edge, const Vec3& p)
{
    const std::array<double, 2> ux{lo.x - p.x, lo.x + edge - p.x};
    const std::array<double, 2> uy{lo.y - p.y, lo.y + edge - p.y};
    const std::array<double, 2> uz{lo.z - p.z, lo.z + edge - p.z};
    const std::array<double, 2> sign{-1.0, 1.0};
    double phi = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) {
                phi += sign[i] * sign[j] * sign[k] * volume_integral(ux[i], uy[j], uz[k]);
            }
        }
    }
    return phi;
}

std::vector<Vec3> direct_sum_field(const ParticleSystem& sys, int image_shells)
{
    check_size(sys, image_shells);
    const std::size_t n = sys.size();
    const double box = sys.box_length();
    const double background_density = -static_cast<double>(n) / sys.volume();
    const auto pos = sys.positions();
    const Vec3 corner = background_corner(sys);

    std::vector<Vec3> field(n);
    for_each_cell(image_shells, [&](int a, int b, int c) {
        const Vec3 offset = Vec3{static_cast<double>(a), static_cast<double>(b),
                                 static_cast<double>(c)} * box;
        const bool home = (a == 0 && b == 0 && c == 0);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 e{};
            for (std::size_t j = 0; j < n; ++j) {
                if (home && i == j) {
                    continue;
                }
                const Vec3 d = pos[i] - (pos[j] + offset);
                const double r2 = norm2(d);
                e += d / (r2 * std::sqrt(r2));
            }
            e += uniform_cube_field(corner + offset, box, pos[i]) * background_density;
            field[i] += e;
        }
    });
    return field;
}

double direct_sum_configurational_energy(const ParticleSystem& sys, int image_shells)
{
    check_size(sys, image_shells);
    const std::size_t n = sys.size();
    const double box = sys.box_length();
    const double background_density = -static_cast<double>(n) / sys.volume();
    const auto pos = sys.positions();
    const Vec3 corner = background_corner(sys);

    double energy = 0.0;
    for_each_cell(image_shells, [&](int a, int b, int c) {
        const Vec3 offset = Vec3{static_cast<double>(a), static_cast<double>(b),
                                 static_cast<double>(c)} * box;
        const bool home = (a == 0 && b == 0 && c == 0);
        double cell = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double pair = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (home && i == j) {
                    continue;
                }
                pair += 1.0 / norm(pos[i] - (pos[j] + offset));
            }
            cell += 0.5 * pair +
                    background_density * uniform_cube_potential(corner + offset, box, pos[i]);
        }
        energy += cell;
    });
    return energy / static_cast<double>(n);
}

} // namespace ocp
