#include "ocp/sampler.hpp"

#include "ocp/errors.hpp"
#include "ocp/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

namespace ocp {

namespace {

constexpr double kTargetAcceptLow = 0.4;
constexpr double kTargetAcceptHigh = 0.6;
constexpr std::size_t kTuneInterval = 5;
constexpr std::size_t kRefreshSweeps = 100;

double autocorrelation_at(std::span<const double> x, std::size_t lag)
{
    const std::size_t n = x.size();
    if (lag >= n) {
        return 0.0;
    }
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) {
        var += (v - mean) * (v - mean);
    }
    if (var == 0.0) {
        return 0.0;
    }
    double cov = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) {
        cov += (x[t] - mean) * (x[t + lag] - mean);
    }
    return (cov / static_cast<double>(n - lag)) / (var / static_cast<double>(n));
}

// Incremental Ewald energy for single-particle moves. Real-space pair energies and
// per-particle phases are cached so a trial move only evaluates the moved particle.
class MetropolisChain {
public:
    MetropolisChain(ParticleSystem sys, const EwaldConfig& cfg, double gamma)
        : sys_(std::move(sys)), ewald_(sys_.box_length(), sys_.size(), cfg), gamma_(gamma),
          nk_(ewald_.kvectors().size())
    {
        refresh();
    }

    // Rebuilds every cache from the positions, discarding accumulated rounding.
    void refresh()
    {
        const auto pos = sys_.positions();
        const std::size_t n = pos.size();
        pair_.assign(n * n, 0.0);
        double real = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double e = ewald_.pair_energy(norm(ewald_.minimum_image(pos[i] - pos[j])));
                pair_[i * n + j] = e;
                pair_[j * n + i] = e;
                real += e;
            }
        }
        phase_re_.resize(n * nk_);
        phase_im_.resize(n * nk_);
        rho_.assign(nk_);
        for (std::size_t i = 0; i < n; ++i) {
            ewald_.phases(pos[i], trial_);
            std::copy(trial_.re.begin(), trial_.re.end(), phase_re_.begin() + i * nk_);
            std::copy(trial_.im.begin(), trial_.im.end(), phase_im_.begin() + i * nk_);
            for (std::size_t q = 0; q < nk_; ++q) {
                rho_.re[q] += trial_.re[q];
                rho_.im[q] += trial_.im[q];
            }
        }
        energy_ = real + ewald_.reciprocal_energy(rho_) + ewald_.constant_energy();
    }

    // One attempted move of particle i; returns whether it was accepted.
    bool attempt(std::size_t i, double step, std::mt19937_64& rng)
    {
        std::uniform_real_distribution<double> shift(-step, step);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const Vec3 old_pos = sys_.position(i);
        const double dx = shift(rng);
        const double dy = shift(rng);
        const double dz = shift(rng);
        const Vec3 new_pos = sys_.wrap(old_pos + Vec3{dx, dy, dz});

        double delta = 0.0;
        const auto positions = sys_.positions();
        const std::size_t n = positions.size();
        const double* old_row = pair_.data() + i * n;
        new_row_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                new_row_[j] = 0.0;
                continue;
            }
            new_row_[j] = ewald_.pair_energy(norm(ewald_.minimum_image(new_pos - positions[j])));
            delta += new_row_[j] - old_row[j];
        }

        ewald_.phases(new_pos, trial_);
        const double* old_re = phase_re_.data() + i * nk_;
        const double* old_im = phase_im_.data() + i * nk_;
        delta += ewald_.reciprocal_energy_change(rho_, {old_re, nk_}, {old_im, nk_}, trial_);

        const double log_accept = -gamma_ * delta;
        const double u = unit(rng);
        if (log_accept < 0.0 && u >= std::exp(log_accept)) {
            return false;
        }
        sys_.set_position(i, new_pos);
        for (std::size_t j = 0; j < n; ++j) {
            pair_[i * n + j] = new_row_[j];
            pair_[j * n + i] = new_row_[j];
        }
        double* cur_re = phase_re_.data() + i * nk_;
        double* cur_im = phase_im_.data() + i * nk_;
        for (std::size_t q = 0; q < nk_; ++q) {
            rho_.re[q] += trial_.re[q] - cur_re[q];
            rho_.im[q] += trial_.im[q] - cur_im[q];
            cur_re[q] = trial_.re[q];
            cur_im[q] = trial_.im[q];
        }
        energy_ += delta;
        return true;
    }

    // One sweep: every particle attempted once in index order. Returns accepted count.
    std::size_t sweep(double step, std::mt19937_64& rng)
    {
        std::size_t accepted = 0;
        for (std::size_t i = 0; i < sys_.size(); ++i) {
            accepted += attempt(i, step, rng) ? 1 : 0;
        }
        return accepted;
    }

    const ParticleSystem& system() const noexcept { return sys_; }
    double energy_per_particle() const noexcept
    {
        return energy_ / static_cast<double>(sys_.size());
    }

private:
    ParticleSystem sys_;
    EwaldSummation ewald_;
    double gamma_;
    std::size_t nk_;
    std::vector<double> pair_; ///< real-space pair energies, N x N
    std::vector<double> new_row_;
    std::vector<double> phase_re_; ///< exp(i k . r_j), N x nk
    std::vector<double> phase_im_;
    KSpaceArray rho_;
    KSpaceArray trial_;
    double energy_ = 0.0;
};

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

} // namespace

void MetropolisConfig::validate() const
{
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("gamma must be positive, got " + std::to_string(gamma));
    }
    if (count < 16) {
        throw DomainError("Metropolis sampling needs at least 16 particles, got " +
                          std::to_string(count));
    }
    if (sweeps < 1) {
        throw DomainError("sweeps must be at least 1");
    }
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
        throw DomainError("burn-in fraction must lie in [0, 1)");
    }
    if (record_stride && *record_stride < 1) {
        throw DomainError("record stride must be at least 1");
    }
}

SamplingResult metropolis_sample(const MetropolisConfig& cfg, const RecordCallback& on_record)
{
    cfg.validate();
    const ParticleSystem start = random_configuration(cfg.count, cfg.seed);
    const EwaldConfig ewald_cfg =
        EwaldConfig::tuned(start.box_length(), start.size(), cfg.ewald_target);
    MetropolisChain chain(start, ewald_cfg, cfg.gamma);
    auto rng = make_engine(cfg.seed, Stream::positions);

    const double box = start.box_length();
    const double max_step = 0.5 * box;
    double step = std::min(1.0, max_step);
    const double n = static_cast<double>(cfg.count);

    SamplingResult result;
    SamplingDiagnostics& diag = result.diagnostics;
    diag.burn_in_sweeps =
        static_cast<std::size_t>(std::floor(cfg.burn_in_fraction * static_cast<double>(cfg.sweeps)));
    const std::size_t tune_sweeps = diag.burn_in_sweeps / 2;

    std::size_t window_accepted = 0;
    std::size_t window_sweeps = 0;
    std::size_t burn_accepted = 0;
    std::vector<double> burn_energy;
    for (std::size_t s = 0; s < diag.burn_in_sweeps; ++s) {
        const std::size_t accepted = chain.sweep(step, rng);
        if (s < tune_sweeps) {
            window_accepted += accepted;
            if (++window_sweeps == kTuneInterval || s + 1 == tune_sweeps) {
                const double rate = static_cast<double>(window_accepted) /
                                    (n * static_cast<double>(window_sweeps));
                if (rate > kTargetAcceptHigh) {
                    step = std::min(max_step, step * (0.5 + rate));
                } else if (rate < kTargetAcceptLow) {
                    step *= std::max(0.1, rate / 0.5);
                }
                window_accepted = 0;
                window_sweeps = 0;
            }
        } else {
            burn_accepted += accepted;
            burn_energy.push_back(chain.energy_per_particle());
        }
    }
    diag.step_size = step;

    if (cfg.record_stride) {
        diag.record_stride = *cfg.record_stride;
    } else {
        std::size_t stride = 0;
        for (std::size_t lag = 1; lag < burn_energy.size() / 2; ++lag) {
            if (autocorrelation_at(burn_energy, lag) < 0.1) {
                stride = lag;
                break;
            }
        }
        if (stride == 0) {
            const double rate = burn_energy.empty()
                                    ? 0.5
                                    : static_cast<double>(burn_accepted) /
                                          (n * static_cast<double>(burn_energy.size()));
            stride = static_cast<std::size_t>(std::ceil(1.0 / std::max(rate, 1e-3)));
        }
        diag.record_stride = stride;
    }

    chain.refresh();
    std::size_t production_accepted = 0;
    const std::size_t production = cfg.sweeps - diag.burn_in_sweeps;
    for (std::size_t s = 0; s < production; ++s) {
        production_accepted += chain.sweep(step, rng);
        if ((s + 1) % kRefreshSweeps == 0) {
            chain.refresh();
        }
        if ((s + 1) % diag.record_stride == 0) {
            result.recorded_energy.push_back(chain.energy_per_particle());
            if (on_record) {
                on_record(chain.system(), diag.records);
            }
            ++diag.records;
        }
    }
    diag.acceptance_rate = production == 0
                               ? 0.0
                               : static_cast<double>(production_accepted) /
                                     (n * static_cast<double>(production));
    if (production > 0 && (diag.acceptance_rate < 0.1 || diag.acceptance_rate > 0.9)) {
        diag.warnings.push_back("acceptance rate " + format_number(diag.acceptance_rate) +
                                " outside [0.1, 0.9] after step tuning");
    }
    if (diag.records == 0) {
        diag.warnings.push_back("no configurations recorded: stride " +
                                std::to_string(diag.record_stride) + " exceeds " +
                                std::to_string(production) + " production sweeps");
    }
    result.state = chain.system();
    return result;
}

ParticleSystem metropolis_positions(double gamma, std::size_t count, std::size_t sweeps,
                                    std::uint64_t seed)
{
    MetropolisConfig cfg;
    cfg.gamma = gamma;
    cfg.count = count;
    cfg.sweeps = sweeps;
    cfg.seed = seed;
    return metropolis_sample(cfg).state;
}

std::vector<Vec3> sample_velocities(std::size_t count, std::uint64_t seed)
{
    auto rng = make_engine(seed, Stream::velocities);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec3> v(count);
    for (Vec3& vi : v) {
        vi.x = normal(rng);
        vi.y = normal(rng);
        vi.z = normal(rng);
    }
    return v;
}

MicrofieldAccumulator::MicrofieldAccumulator(std::optional<double> histogram_upper)
    : upper_(histogram_upper), bins_(kHistogramBins, 0)
{
    if (upper_ && !(*upper_ > 0.0)) {
        throw InputError("histogram range must be positive");
    }
}

void MicrofieldAccumulator::add(std::span<const Vec3> fields)
{
    if (fields.empty()) {
        throw InputError("microfield batch is empty");
    }
    if (configs_ == 0) {
        particles_ = fields.size();
    } else if (fields.size() != particles_) {
        throw InputError("microfield batch has " + std::to_string(fields.size()) +
                         " particles, expected " + std::to_string(particles_));
    }
    if (!upper_) {
        double sum_sq = 0.0;
        for (const Vec3& e : fields) {
            sum_sq += norm2(e);
        }
        const double rms = std::sqrt(sum_sq / static_cast<double>(fields.size()));
        upper_ = rms > 0.0 ? 5.0 * rms : 1.0;
    }
    const std::size_t first = groups_.size();
    groups_.resize(first + kMinBlocks);
    const double width = *upper_ / static_cast<double>(kHistogramBins);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const Vec3& e = fields[i];
        Unit& u = groups_[first + i * kMinBlocks / fields.size()];
        u.n += 1.0;
        u.sum += e;
        u.sum_sq += Vec3{e.x * e.x, e.y * e.y, e.z * e.z};
        const double magnitude = norm(e);
        const auto bin = static_cast<std::size_t>(magnitude / width);
        if (bin < kHistogramBins) {
            ++bins_[bin];
        } else {
            ++overflow_;
        }
    }
    ++configs_;
}

MicrofieldStats MicrofieldAccumulator::stats() const
{
    if (configs_ == 0) {
        throw InputError("no microfield samples");
    }
    // Units: whole configurations when there are enough of them, else particle groups.
    std::vector<Unit> units;
    if (configs_ >= kMinBlocks) {
        units.resize(configs_);
        for (std::size_t c = 0; c < configs_; ++c) {
            for (std::size_t g = 0; g < kMinBlocks; ++g) {
                const Unit& src = groups_[c * kMinBlocks + g];
                units[c].n += src.n;
                units[c].sum += src.sum;
                units[c].sum_sq += src.sum_sq;
            }
        }
    } else {
        for (const Unit& u : groups_) {
            if (u.n > 0.0) {
                units.push_back(u);
            }
        }
    }

    struct Moments {
        Vec3 mean;
        Vec3 var;
    };
    const auto moments = [](const Unit& total) {
        Moments m;
        m.mean = total.sum / total.n;
        m.var = total.sum_sq / total.n - Vec3{m.mean.x * m.mean.x, m.mean.y * m.mean.y,
                                              m.mean.z * m.mean.z};
        return m;
    };

    Unit total;
    for (const Unit& u : units) {
        total.n += u.n;
        total.sum += u.sum;
        total.sum_sq += u.sum_sq;
    }
    const Moments all = moments(total);

    MicrofieldStats out;
    out.mean_field = all.mean;
    out.variance_transverse = std::max(0.0, all.var.x + all.var.y);
    out.variance_total = std::max(out.variance_transverse, all.var.x + all.var.y + all.var.z);
    out.sample_count = static_cast<std::size_t>(total.n);
    out.config_count = configs_;

    const std::size_t unit_count = units.size();
    const std::size_t blocks = std::min(
        unit_count,
        std::max(kMinBlocks, static_cast<std::size_t>(std::sqrt(static_cast<double>(unit_count)))));
    out.blocks = blocks;
    if (blocks >= 2) {
        std::vector<Unit> block(blocks);
        for (std::size_t k = 0; k < unit_count; ++k) {
            Unit& b = block[k * blocks / unit_count];
            b.n += units[k].n;
            b.sum += units[k].sum;
            b.sum_sq += units[k].sum_sq;
        }
        std::vector<double> var_b(blocks);
        std::vector<Vec3> mean_b(blocks);
        for (std::size_t b = 0; b < blocks; ++b) {
            const Moments m = moments(block[b]);
            var_b[b] = m.var.x + m.var.y + m.var.z;
            mean_b[b] = m.mean;
        }
        const double bd = static_cast<double>(blocks);
        double var_mean = 0.0;
        Vec3 mean_mean;
        for (std::size_t b = 0; b < blocks; ++b) {
            var_mean += var_b[b];
            mean_mean += mean_b[b];
        }
        var_mean /= bd;
        mean_mean /= bd;
        double ss = 0.0;
        Vec3 ss_mean;
        for (std::size_t b = 0; b < blocks; ++b) {
            ss += (var_b[b] - var_mean) * (var_b[b] - var_mean);
            const Vec3 d = mean_b[b] - mean_mean;
            ss_mean += Vec3{d.x * d.x, d.y * d.y, d.z * d.z};
        }
        out.stderr_variance = std::sqrt(ss / (bd * (bd - 1.0)));
        const double scale = 1.0 / (bd * (bd - 1.0));
        out.stderr_mean = Vec3{std::sqrt(ss_mean.x * scale), std::sqrt(ss_mean.y * scale),
                               std::sqrt(ss_mean.z * scale)};
    }

    out.histogram.upper = *upper_;
    out.histogram.overflow = overflow_;
    out.histogram.density.resize(kHistogramBins);
    const double width = out.histogram.bin_width();
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
        out.histogram.density[b] = static_cast<double>(bins_[b]) / (total.n * width);
    }
    return out;
}

MicrofieldStats microfield_stats(std::span<const ParticleSystem> configs, const EwaldConfig& cfg)
{
    if (configs.empty()) {
        throw InputError("microfield statistics need at least one configuration");
    }
    const std::size_t n = configs.front().size();
    const double box = configs.front().box_length();
    for (std::size_t c = 1; c < configs.size(); ++c) {
        if (configs[c].size() != n || configs[c].box_length() != box) {
            throw InputError("configuration " + std::to_string(c) + " has N = " +
                             std::to_string(configs[c].size()) + ", expected " +
                             std::to_string(n));
        }
    }
    const EwaldSummation ewald(box, n, cfg);
    MicrofieldAccumulator acc;
    for (const ParticleSystem& sys : configs) {
        acc.add(ewald.field(sys.positions()));
    }
    return acc.stats();
}

IlmReport ilm_check(const MicrofieldStats& stats, double gamma)
{
    if (!(gamma > 0.0)) {
        throw DomainError("gamma must be positive, got " + std::to_string(gamma));
    }
    IlmReport r;
    r.measured = stats.variance_total;
    r.predicted = 3.0 / gamma;
    r.ratio = r.measured / r.predicted;
    r.tolerance = std::max(0.1, 3.0 * stats.stderr_variance / r.predicted);
    r.pass = std::abs(r.ratio - 1.0) < r.tolerance;
    return r;
}

PairCorrelation pair_correlation(std::span<const ParticleSystem> configs, std::size_t bins)
{
    if (configs.empty() || bins == 0) {
        throw InputError("pair correlation needs configurations and at least one bin");
    }
    const std::size_t n = configs.front().size();
    const double box = configs.front().box_length();
    const double r_max = 0.5 * box;
    const double width = r_max / static_cast<double>(bins);
    // Pair density of N - 1 partners spread over the volume gives g = 1 for an ideal gas.
    const double pair_norm =
        0.5 * static_cast<double>(n) * static_cast<double>(n - 1) / (box * box * box);

    std::vector<double> sum(bins, 0.0), sum_sq(bins, 0.0);
    std::vector<double> g_c(bins);
    for (const ParticleSystem& sys : configs) {
        if (sys.size() != n || sys.box_length() != box) {
            throw InputError("pair correlation configurations differ in shape");
        }
        std::fill(g_c.begin(), g_c.end(), 0.0);
        const auto pos = sys.positions();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double r = norm(sys.minimum_image(pos[i] - pos[j]));
                const auto b = static_cast<std::size_t>(r / width);
                if (b < bins) {
                    g_c[b] += 1.0;
                }
            }
        }
        for (std::size_t b = 0; b < bins; ++b) {
            const double lo = width * static_cast<double>(b);
            const double hi = lo + width;
            const double shell = 4.0 / 3.0 * std::numbers::pi * (hi * hi * hi - lo * lo * lo);
            const double g = g_c[b] / (pair_norm * shell);
            sum[b] += g;
            sum_sq[b] += g * g;
        }
    }
    const double m = static_cast<double>(configs.size());
    PairCorrelation out;
    for (std::size_t b = 0; b < bins; ++b) {
        out.r.push_back(width * (static_cast<double>(b) + 0.5));
        const double mean = sum[b] / m;
        out.g.push_back(mean);
        const double var = m > 1.0 ? std::max(0.0, (sum_sq[b] / m - mean * mean) * m / (m - 1.0)) : 0.0;
        out.stderr_g.push_back(std::sqrt(var / m));
    }
    return out;
}

} // namespace ocp
