#include "ocp/ewald.hpp"

#include "ocp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ocp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxKspaceCutoff = 64;

double solve_alpha_for_cutoff(double rc, double box, std::size_t count, double target)
{
    const double volume = box * box * box;
    const double prefactor = 2.0 * std::sqrt(static_cast<double>(count) / (rc * volume));
    const double log_ratio = std::log(prefactor / target);
    return std::sqrt(std::max(log_ratio, 1.0)) / rc;
}

// Per-dimension tables exp(i 2 pi n x / L) for n in [-kmax, kmax], stored at n + kmax.
void fill_axis_phases(double x, double box, int kmax, double* re, double* im)
{
    const double angle = 2.0 * kPi * x / box;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    re[kmax] = 1.0;
    im[kmax] = 0.0;
    double pr = 1.0, pi = 0.0;
    for (int n = 1; n <= kmax; ++n) {
        const double nr = pr * c - pi * s;
        const double ni = pr * s + pi * c;
        pr = nr;
        pi = ni;
        re[kmax + n] = pr;
        im[kmax + n] = pi;
        re[kmax - n] = pr;
        im[kmax - n] = -pi;
    }
}

} // namespace

double EwaldConfig::real_space_error(double box_length, std::size_t count) const
{
    const double volume = box_length * box_length * box_length;
    return 2.0 * std::sqrt(static_cast<double>(count) / (real_cutoff * volume)) *
           std::exp(-splitting_alpha * splitting_alpha * real_cutoff * real_cutoff);
}

double EwaldConfig::kspace_error(double box_length, std::size_t count) const
{
    const double volume = box_length * box_length * box_length;
    const double kcut = 2.0 * kPi * kspace_cutoff / box_length;
    const double a = splitting_alpha;
    return a * std::sqrt(8.0 * static_cast<double>(count) / (volume * kcut)) *
           std::exp(-kcut * kcut / (4.0 * a * a));
}

void EwaldConfig::validate(double box_length, std::size_t count) const
{
    if (!(splitting_alpha > 0.0) || !(real_cutoff > 0.0) || kspace_cutoff < 1 ||
        !(target_rms_error > 0.0)) {
        throw ConfigError("Ewald parameters must be positive");
    }
    if (kspace_cutoff > kMaxKspaceCutoff) {
        throw ConfigError("Ewald k-space cutoff " + std::to_string(kspace_cutoff) +
                          " exceeds the supported maximum " + std::to_string(kMaxKspaceCutoff));
    }
    if (real_cutoff > 0.5 * box_length * (1.0 + 1e-12)) {
        throw ConfigError("Ewald real-space cutoff " + std::to_string(real_cutoff) +
                          " exceeds half the box length " + std::to_string(0.5 * box_length));
    }
    const double slack = target_rms_error * (1.0 + 1e-9);
    if (real_space_error(box_length, count) > slack) {
        throw ConfigError("Ewald real-space truncation error " +
                          std::to_string(real_space_error(box_length, count)) +
                          " exceeds target " + std::to_string(target_rms_error));
    }
    if (kspace_error(box_length, count) > slack) {
        throw ConfigError("Ewald k-space truncation error " +
                          std::to_string(kspace_error(box_length, count)) +
                          " exceeds target " + std::to_string(target_rms_error));
    }
}

EwaldConfig EwaldConfig::tuned(double box_length, std::size_t count, double target,
                               std::optional<double> alpha)
{
    if (!(target > 0.0)) {
        throw ConfigError("Ewald target error must be positive");
    }
    EwaldConfig cfg;
    cfg.target_rms_error = target;
    // Each truncation error is tuned to half the target so their combination
    // stays below it.
    const double component = 0.5 * target;
    const double half_box = 0.5 * box_length;
    if (alpha) {
        if (!(*alpha > 0.0)) {
            throw ConfigError("Ewald splitting alpha must be positive");
        }
        cfg.splitting_alpha = *alpha;
        double rc = half_box;
        for (int it = 0; it < 50; ++it) {
            const double volume = box_length * box_length * box_length;
            const double prefactor = 2.0 * std::sqrt(static_cast<double>(count) / (rc * volume));
            rc = std::sqrt(std::max(std::log(prefactor / component), 1.0)) / *alpha;
        }
        cfg.real_cutoff = rc * (1.0 + 1e-6);
        if (cfg.real_cutoff > half_box) {
            throw ConfigError("alpha = " + std::to_string(*alpha) +
                              " needs a real-space cutoff beyond L/2");
        }
    } else {
        cfg.real_cutoff = half_box;
        cfg.splitting_alpha = solve_alpha_for_cutoff(half_box, box_length, count, component);
    }
    for (cfg.kspace_cutoff = 1; cfg.kspace_cutoff <= kMaxKspaceCutoff; ++cfg.kspace_cutoff) {
        if (cfg.kspace_error(box_length, count) <= component) {
            break;
        }
    }
    cfg.validate(box_length, count);
    return cfg;
}

EwaldSummation::EwaldSummation(double box_length, std::size_t count, const EwaldConfig& cfg)
    : box_(box_length), count_(count), cfg_(cfg), volume_(box_length * box_length * box_length)
{
    cfg_.validate(box_, count_);
    const int kmax = cfg_.kspace_cutoff;
    const double dk = 2.0 * kPi / box_;
    const double inv_four_alpha2 = 1.0 / (4.0 * cfg_.splitting_alpha * cfg_.splitting_alpha);
    // Half space: nx > 0, or nx == 0 and ny > 0, or nx == ny == 0 and nz > 0.
    for (int nx = 0; nx <= kmax; ++nx) {
        for (int ny = -kmax; ny <= kmax; ++ny) {
            for (int nz = -kmax; nz <= kmax; ++nz) {
                if (nx == 0 && (ny < 0 || (ny == 0 && nz <= 0))) {
                    continue;
                }
                if (nx * nx + ny * ny + nz * nz > kmax * kmax) {
                    continue;
                }
                KVector kv;
                kv.nx = nx;
                kv.ny = ny;
                kv.nz = nz;
                kv.k = Vec3{dk * nx, dk * ny, dk * nz};
                const double k2 = norm2(kv.k);
                kv.weight = std::exp(-k2 * inv_four_alpha2) / k2;
                kvecs_.push_back(kv);
            }
        }
    }
    for (std::size_t q = 0; q < kvecs_.size(); ++q) {
        const KVector& kv = kvecs_[q];
        if (rows_.empty() || rows_.back().ix != kmax + kv.nx || rows_.back().iy != kmax + kv.ny) {
            rows_.push_back(KRow{kmax + kv.nx, kmax + kv.ny, kmax + kv.nz, q, 0});
        }
        ++rows_.back().length;
        weight_.push_back(kv.weight);
        kx_w_.push_back(kv.k.x * kv.weight);
        ky_w_.push_back(kv.k.y * kv.weight);
        kz_w_.push_back(kv.k.z * kv.weight);
    }
}

Vec3 EwaldSummation::minimum_image(Vec3 d) const noexcept
{
    const double box = box_;
    const double half = 0.5 * box_;
    // Cheap shift for differences of in-box coordinates; general rounding otherwise.
    const auto image = [box, half](double c) {
        if (c > half) {
            c -= box;
        } else if (c < -half) {
            c += box;
        }
        if (c > half || c < -half) {
            c -= box * std::nearbyint(c / box);
        }
        return c;
    };
    return Vec3{image(d.x), image(d.y), image(d.z)};
}

double EwaldSummation::pair_energy(double r) const noexcept
{
    if (r >= cfg_.real_cutoff) {
        return 0.0;
    }
    return std::erfc(cfg_.splitting_alpha * r) / r;
}

double EwaldSummation::constant_energy() const noexcept
{
    const double n = static_cast<double>(count_);
    const double alpha = cfg_.splitting_alpha;
    const double self = -alpha * n / std::sqrt(kPi);
    const double background = -kPi * n * n / (2.0 * volume_ * alpha * alpha);
    return self + background;
}

void EwaldSummation::phases_into(const Vec3& r, double* re, double* im) const
{
    const int kmax = cfg_.kspace_cutoff;
    const int width = 2 * kmax + 1;
    // Small fixed-size scratch; kmax is bounded by kMaxKspaceCutoff.
    double tre[3 * (2 * kMaxKspaceCutoff + 1)];
    double tim[3 * (2 * kMaxKspaceCutoff + 1)];
    fill_axis_phases(r.x, box_, kmax, tre, tim);
    fill_axis_phases(r.y, box_, kmax, tre + width, tim + width);
    fill_axis_phases(r.z, box_, kmax, tre + 2 * width, tim + 2 * width);
    const double* yre = tre + width;
    const double* yim = tim + width;
    const double* zre = tre + 2 * width;
    const double* zim = tim + 2 * width;
    for (const KRow& row : rows_) {
        const double ar = tre[row.ix], ai = tim[row.ix];
        const double br = yre[row.iy], bi = yim[row.iy];
        const double xyr = ar * br - ai * bi;
        const double xyi = ar * bi + ai * br;
        const double* cr = zre + row.iz_begin;
        const double* ci = zim + row.iz_begin;
        double* ore = re + row.offset;
        double* oim = im + row.offset;
        for (std::size_t q = 0; q < row.length; ++q) {
            ore[q] = xyr * cr[q] - xyi * ci[q];
            oim[q] = xyr * ci[q] + xyi * cr[q];
        }
    }
}

void EwaldSummation::phases(const Vec3& r, KSpaceArray& out) const
{
    out.re.resize(kvecs_.size());
    out.im.resize(kvecs_.size());
    phases_into(r, out.re.data(), out.im.data());
}

KSpaceArray EwaldSummation::structure_factor(std::span<const Vec3> positions) const
{
    KSpaceArray rho;
    rho.assign(kvecs_.size());
    KSpaceArray phase;
    for (const Vec3& r : positions) {
        phases(r, phase);
        for (std::size_t q = 0; q < rho.size(); ++q) {
            rho.re[q] += phase.re[q];
            rho.im[q] += phase.im[q];
        }
    }
    return rho;
}

double EwaldSummation::reciprocal_energy(const KSpaceArray& rho) const
{
    double sum = 0.0;
    for (std::size_t q = 0; q < weight_.size(); ++q) {
        sum += weight_[q] * (rho.re[q] * rho.re[q] + rho.im[q] * rho.im[q]);
    }
    // Both halves of k space: 2 * (2 pi / V).
    return 4.0 * kPi / volume_ * sum;
}

double EwaldSummation::reciprocal_energy_change(const KSpaceArray& rho,
                                                std::span<const double> old_re,
                                                std::span<const double> old_im,
                                                const KSpaceArray& new_phase) const
{
    double sum = 0.0;
    for (std::size_t q = 0; q < weight_.size(); ++q) {
        const double dr = new_phase.re[q] - old_re[q];
        const double di = new_phase.im[q] - old_im[q];
        sum += weight_[q] * (2.0 * (rho.re[q] * dr + rho.im[q] * di) + dr * dr + di * di);
    }
    return 4.0 * kPi / volume_ * sum;
}

FieldEnergy EwaldSummation::evaluate(std::span<const Vec3> positions) const
{
    const std::size_t n = positions.size();
    if (n != count_) {
        throw InputError("Ewald summation set up for " + std::to_string(count_) +
                         " particles, got " + std::to_string(n));
    }
    FieldEnergy out;
    out.field.assign(n, Vec3{});

    const double alpha = cfg_.splitting_alpha;
    const double rc2 = cfg_.real_cutoff * cfg_.real_cutoff;
    const double gauss_pref = 2.0 * alpha / std::sqrt(kPi);

    double real_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 fi{};
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec3 d = minimum_image(positions[i] - positions[j]);
            const double r2 = norm2(d);
            if (r2 >= rc2) {
                continue;
            }
            const double r = std::sqrt(r2);
            const double screened = std::erfc(alpha * r) / r;
            const double magnitude = (screened + gauss_pref * std::exp(-alpha * alpha * r2)) / r2;
            real_energy += screened;
            const Vec3 f = d * magnitude;
            fi += f;
            out.field[j] -= f;
        }
        out.field[i] += fi;
    }

    // Reciprocal space: keep per-particle phases so the field pass reuses them.
    const std::size_t nk = kvecs_.size();
    // Reused across calls; a fresh multi-megabyte allocation per call costs more than the sum.
    thread_local std::vector<double> phase_re, phase_im;
    phase_re.resize(n * nk);
    phase_im.resize(n * nk);
    KSpaceArray rho;
    rho.assign(nk);
    for (std::size_t i = 0; i < n; ++i) {
        double* pr = phase_re.data() + i * nk;
        double* pi = phase_im.data() + i * nk;
        phases_into(positions[i], pr, pi);
        for (std::size_t q = 0; q < nk; ++q) {
            rho.re[q] += pr[q];
            rho.im[q] += pi[q];
        }
    }
    const double field_pref = 8.0 * kPi / volume_;
    for (std::size_t i = 0; i < n; ++i) {
        const double* pr = phase_re.data() + i * nk;
        const double* pi = phase_im.data() + i * nk;
        double fx = 0.0, fy = 0.0, fz = 0.0;
        for (std::size_t q = 0; q < nk; ++q) {
            // Im(exp(i k.r_i) conj(rho_k))
            const double s = pi[q] * rho.re[q] - pr[q] * rho.im[q];
            fx += kx_w_[q] * s;
            fy += ky_w_[q] * s;
            fz += kz_w_[q] * s;
        }
        out.field[i] += Vec3{fx, fy, fz} * field_pref;
    }

    const double total = real_energy + reciprocal_energy(rho) + constant_energy();
    out.energy_per_particle = total / static_cast<double>(n);
    return out;
}

std::vector<Vec3> EwaldSummation::field(std::span<const Vec3> positions) const
{
    return evaluate(positions).field;
}

double EwaldSummation::energy_per_particle(std::span<const Vec3> positions) const
{
    return evaluate(positions).energy_per_particle;
}

std::vector<Vec3> ewald_field(const ParticleSystem& sys, const EwaldConfig& cfg)
{
    return EwaldSummation(sys.box_length(), sys.size(), cfg).field(sys.positions());
}

double ewald_energy(const ParticleSystem& sys, const EwaldConfig& cfg)
{
    return EwaldSummation(sys.box_length(), sys.size(), cfg).energy_per_particle(sys.positions());
}

} // namespace ocp
