#include "ocp/observables.hpp"

#include "ocp/errors.hpp"
#include "ocp/seeding.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace ocp {

namespace {

void require_beta(double beta)
{
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw DomainError("beta must be positive, got " + std::to_string(beta));
    }
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

// Two-pass population moments.
template <class F>
Moments moments(std::size_t n, F value)
{
    Moments m;
    if (n == 0) {
        return m;
    }
    for (std::size_t i = 0; i < n; ++i) {
        m.mean += value(i);
    }
    m.mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = value(i) - m.mean;
        m.variance += d * d;
    }
    m.variance /= static_cast<double>(n);
    return m;
}

std::string fmt17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double angular_momentum_L(Vec2 vperp, double beta)
{
    require_beta(beta);
    return norm2(vperp) / beta;
}

double L_dot(Vec2 vperp, Vec2 eperp, double beta)
{
    require_beta(beta);
    return 2.0 * dot(vperp, eperp) / beta;
}

ParticleSeries series_L(const TrajectoryRecord& traj)
{
    require_beta(traj.meta.beta);
    ParticleSeries s;
    s.particles = traj.count();
    s.samples = traj.records();
    s.interval = traj.meta.dt * static_cast<double>(traj.meta.record_stride);
    s.values.resize(s.particles * s.samples);
    for (std::size_t p = 0; p < s.particles; ++p) {
        for (std::size_t t = 0; t < s.samples; ++t) {
            s.values[p * s.samples + t] = angular_momentum_L(traj.v(t, p), traj.meta.beta);
        }
    }
    return s;
}

ParticleSeries series_L_dot(const TrajectoryRecord& traj)
{
    require_beta(traj.meta.beta);
    ParticleSeries s;
    s.particles = traj.count();
    s.samples = traj.records();
    s.interval = traj.meta.dt * static_cast<double>(traj.meta.record_stride);
    s.values.resize(s.particles * s.samples);
    for (std::size_t p = 0; p < s.particles; ++p) {
        for (std::size_t t = 0; t < s.samples; ++t) {
            s.values[p * s.samples + t] = L_dot(traj.v(t, p), traj.e(t, p), traj.meta.beta);
        }
    }
    return s;
}

CorrelationResult autocorrelation(const ParticleSeries& series, double max_lag,
                                  const AutocorrelationOptions& opts)
{
    const std::size_t np = series.particles;
    const std::size_t nt = series.samples;
    if (np == 0 || nt < 2 || series.values.size() != np * nt) {
        throw InputError("autocorrelation needs at least two samples per particle");
    }
    if (!(series.interval > 0.0)) {
        throw InputError("sample interval must be positive");
    }
    if (!(max_lag >= 0.0)) {
        throw InputError("max_lag must be non-negative");
    }
    const double span = series.interval * static_cast<double>(nt - 1);
    if (max_lag > 0.5 * span * (1.0 + 1e-12)) {
        throw InputError("max_lag " + std::to_string(max_lag) + " exceeds half the series span " +
                         std::to_string(0.5 * span));
    }
    const auto max_k = static_cast<std::size_t>(std::floor(max_lag / series.interval + 1e-9));

    // Per-particle sums: first moment, and lagged products for every lag.
    std::vector<double> first(np, 0.0);
    std::vector<double> lagged(np * (max_k + 1), 0.0);
    for (std::size_t p = 0; p < np; ++p) {
        const double* x = series.values.data() + p * nt;
        double s1 = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            s1 += x[t];
        }
        first[p] = s1;
        for (std::size_t k = 0; k <= max_k; ++k) {
            double acc = 0.0;
            for (std::size_t t = 0; t + k < nt; ++t) {
                acc += x[t] * x[t + k];
            }
            lagged[p * (max_k + 1) + k] = acc;
        }
    }

    // C(k) for a weighted particle ensemble (weights are bootstrap multiplicities).
    const auto correlation = [&](std::span<const double> weight, std::vector<double>& out) {
        double w_total = 0.0;
        double s1 = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            w_total += weight[p];
            s1 += weight[p] * first[p];
        }
        const double mean = s1 / (w_total * static_cast<double>(nt));
        out.assign(max_k + 1, 0.0);
        for (std::size_t k = 0; k <= max_k; ++k) {
            double acc = 0.0;
            for (std::size_t p = 0; p < np; ++p) {
                acc += weight[p] * lagged[p * (max_k + 1) + k];
            }
            out[k] = acc / (w_total * static_cast<double>(nt - k)) - mean * mean;
        }
    };

    std::vector<double> unit(np, 1.0);
    std::vector<double> c;
    correlation(unit, c);
    // Recompute the variance with a centred pass; the raw-moment form loses digits.
    const Moments m = moments(np * nt, [&](std::size_t i) { return series.values[i]; });
    c[0] = m.variance;
    if (!(m.variance > 0.0)) {
        throw InputError("zero variance: correlation undefined");
    }

    CorrelationResult out;
    out.sigma2_L = m.variance;
    out.lags.resize(max_k + 1);
    out.normalized_correlation.resize(max_k + 1);
    for (std::size_t k = 0; k <= max_k; ++k) {
        out.lags[k] = series.interval * static_cast<double>(k);
        out.normalized_correlation[k] = k == 0 ? 1.0 : c[k] / c[0];
    }

    out.stderr_normalized.assign(max_k + 1, 0.0);
    if (opts.bootstrap_replicates >= 2 && np >= 2) {
        auto rng = make_engine(opts.seed, Stream::bootstrap);
        std::uniform_int_distribution<std::size_t> pick(0, np - 1);
        std::vector<double> weight(np);
        std::vector<double> sum(max_k + 1, 0.0), sum_sq(max_k + 1, 0.0);
        std::vector<double> cb;
        for (std::size_t b = 0; b < opts.bootstrap_replicates; ++b) {
            std::fill(weight.begin(), weight.end(), 0.0);
            for (std::size_t p = 0; p < np; ++p) {
                weight[pick(rng)] += 1.0;
            }
            correlation(weight, cb);
            if (!(cb[0] > 0.0)) {
                continue;
            }
            for (std::size_t k = 0; k <= max_k; ++k) {
                const double v = cb[k] / cb[0];
                sum[k] += v;
                sum_sq[k] += v * v;
            }
        }
        const double r = static_cast<double>(opts.bootstrap_replicates);
        for (std::size_t k = 1; k <= max_k; ++k) {
            const double mean = sum[k] / r;
            out.stderr_normalized[k] = std::sqrt(std::max(0.0, sum_sq[k] / r - mean * mean) * r / (r - 1.0));
        }
    }
    return out;
}

EpsilonEstimate epsilon_from_samples(std::span<const Vec2> vperp, std::span<const Vec2> eperp,
                                     double beta)
{
    require_beta(beta);
    if (vperp.size() != eperp.size() || vperp.empty()) {
        throw InputError("v_perp and E_perp samples must be non-empty and of equal length");
    }
    const std::size_t n = vperp.size();
    const Moments l = moments(n, [&](std::size_t i) { return angular_momentum_L(vperp[i], beta); });
    const Moments ld = moments(n, [&](std::size_t i) { return L_dot(vperp[i], eperp[i], beta); });
    const Moments v2 = moments(n, [&](std::size_t i) { return norm2(vperp[i]); });
    const Moments ve = moments(n, [&](std::size_t i) { return dot(vperp[i], eperp[i]); });
    const Moments vx = moments(n, [&](std::size_t i) { return vperp[i].x; });
    const Moments vy = moments(n, [&](std::size_t i) { return vperp[i].y; });
    const Moments ex = moments(n, [&](std::size_t i) { return eperp[i].x; });
    const Moments ey = moments(n, [&](std::size_t i) { return eperp[i].y; });
    if (!(l.variance > 0.0)) {
        throw InputError("zero variance of L: epsilon undefined");
    }
    EpsilonEstimate e;
    e.sigma2_L = l.variance;
    e.sigma2_Ldot = ld.variance;
    e.epsilon_ratio = std::sqrt(ld.variance) / (beta * std::sqrt(l.variance));
    e.epsilon_product = 2.0 / beta * std::sqrt(ve.variance) / std::sqrt(v2.variance);
    e.sigma2_vperp = vx.variance + vy.variance;
    e.sigma2_Eperp = ex.variance + ey.variance;
    e.epsilon_chain =
        2.0 / beta * std::sqrt(0.5 * e.sigma2_vperp * e.sigma2_Eperp) / std::sqrt(v2.variance);
    return e;
}

EpsilonEstimate epsilon_measured(const TrajectoryRecord& traj)
{
    if (traj.records() < 100) {
        throw InputError("epsilon estimate needs at least 100 records, got " +
                         std::to_string(traj.records()));
    }
    return epsilon_from_samples(traj.vperp, traj.eperp, traj.meta.beta);
}

std::optional<double> decorrelation_time(const CorrelationResult& corr)
{
    const auto& c = corr.normalized_correlation;
    const double level = std::exp(-1.0);
    for (std::size_t k = 1; k < c.size(); ++k) {
        if (c[k] < level) {
            const double t0 = corr.lags[k - 1];
            const double t1 = corr.lags[k];
            const double f = (c[k - 1] - level) / (c[k - 1] - c[k]);
            return t0 + f * (t1 - t0);
        }
    }
    return std::nullopt;
}

void annotate_decorrelation(CorrelationResult& corr)
{
    corr.decorrelation_time = decorrelation_time(corr);
    if (corr.decorrelation_time) {
        corr.gyroperiods_to_decorrelate =
            *corr.decorrelation_time * corr.beta / (2.0 * std::numbers::pi);
    } else {
        corr.gyroperiods_to_decorrelate.reset();
    }
}

BoundReport shorttime_bound_check(const CorrelationResult& corr, double epsilon, double beta,
                                  double fixed_tolerance)
{
    BoundReport r;
    const std::size_t n = corr.normalized_correlation.size();
    r.rhs.resize(n);
    r.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double bt = beta * corr.lags[k];
        r.rhs[k] = 1.0 - 0.5 * epsilon * epsilon * bt * bt;
        const double stderr = k < corr.stderr_normalized.size() ? corr.stderr_normalized[k] : 0.0;
        const double margin = corr.normalized_correlation[k] - (r.rhs[k] - fixed_tolerance - 3.0 * stderr);
        if (k > 0 || n == 1) {
            r.worst_margin = std::min(r.worst_margin, margin);
        }
        if (margin < 0.0 && !r.first_violation) {
            r.first_violation = k;
            r.pass = false;
        }
    }
    if (n == 0) {
        r.worst_margin = 0.0;
    }
    return r;
}

DivergenceResult trajectory_divergence(const ParticleSystem& sys, const IntegratorConfig& cfg,
                                       const DivergenceOptions& opts)
{
    cfg.validate();
    if (cfg.thermostat) {
        throw ConfigError("trajectory divergence requires the thermostat to be off");
    }
    if (!(opts.delta0 >= 0.0) || opts.delta0 > 1e-6) {
        throw DomainError("delta0 must lie in [0, 1e-6], got " + std::to_string(opts.delta0));
    }
    if (!(opts.renormalize_time > 0.0) || !(opts.saturation > opts.delta0)) {
        throw DomainError("renormalization time and saturation must be positive");
    }
    DivergenceResult out;
    if (opts.delta0 == 0.0 || cfg.steps == 0) {
        return out;
    }
    const std::size_t n = sys.size();
    const double vel_to_len = 1.0 / std::sqrt(3.0 * cfg.gamma);

    ParticleSystem a = sys;
    ParticleSystem b = sys;
    {
        auto rng = make_engine(opts.seed, Stream::divergence);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Vec3> dir(n);
        double len2 = 0.0;
        for (Vec3& d : dir) {
            d = Vec3{normal(rng), normal(rng), normal(rng)};
            len2 += norm2(d);
        }
        const double scale = opts.delta0 / std::sqrt(len2);
        for (std::size_t i = 0; i < n; ++i) {
            b.set_position(i, a.position(i) + dir[i] * scale);
        }
    }

    const ForceField field(cfg, sys.box_length(), n);
    ForceEvaluation fa, fb;
    field.evaluate(a.positions(), fa);
    field.evaluate(b.positions(), fb);

    const auto separation = [&](const ParticleSystem& x, const ParticleSystem& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += norm2(x.minimum_image(y.position(i) - x.position(i)));
            s += norm2(y.velocity(i) - x.velocity(i)) * vel_to_len * vel_to_len;
        }
        return std::sqrt(s);
    };

    std::size_t interval =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.renormalize_time / cfg.dt)));
    std::size_t done = 0;
    double log_sum = 0.0;
    while (done < cfg.steps) {
        const std::size_t len = std::min(interval, cfg.steps - done);
        const ParticleSystem a0 = a, b0 = b;
        const ForceEvaluation fa0 = fa, fb0 = fb;
        for (std::size_t s = 0; s < len; ++s) {
            boris_step(a, cfg, field, fa);
            boris_step(b, cfg, field, fb);
        }
        const double d = separation(a, b);
        if (d > opts.saturation && len > 1) {
            // Too much growth for a linearized separation: retry with a shorter interval.
            interval = std::max<std::size_t>(1, len / 2);
            a = a0;
            b = b0;
            fa = fa0;
            fb = fb0;
            continue;
        }
        done += len;
        if (d == 0.0) {
            // Separation lost to rounding; the twins coincide from here on.
            log_sum += std::log(std::numeric_limits<double>::min() / opts.delta0);
            break;
        }
        log_sum += std::log(d / opts.delta0);
        ++out.renormalizations;
        const double f = opts.delta0 / d;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 dx = a.minimum_image(b.position(i) - a.position(i));
            b.set_position(i, a.position(i) + dx * f);
            b.set_velocity(i, a.velocity(i) + (b.velocity(i) - a.velocity(i)) * f);
        }
        field.evaluate(b.positions(), fb);
    }
    out.interval_steps = interval;
    out.rate = log_sum / (static_cast<double>(done) * cfg.dt);
    return out;
}

CorrelationResult analyze_trajectory(const TrajectoryRecord& traj, std::optional<double> max_lag,
                                     const AutocorrelationOptions& opts)
{
    const ParticleSeries l = series_L(traj);
    const double span = l.interval * static_cast<double>(l.samples > 0 ? l.samples - 1 : 0);
    CorrelationResult corr = autocorrelation(l, max_lag.value_or(0.5 * span), opts);
    const EpsilonEstimate eps = epsilon_measured(traj);
    corr.beta = traj.meta.beta;
    corr.sigma2_Ldot = eps.sigma2_Ldot;
    corr.epsilon_measured = eps.epsilon_ratio;
    annotate_decorrelation(corr);
    return corr;
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationResult& corr,
                           const BoundReport& bound)
{
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << "lag,normalized_C,bound_rhs\n";
    for (std::size_t k = 0; k < corr.lags.size(); ++k) {
        const double rhs = k < bound.rhs.size() ? bound.rhs[k] : 0.0;
        out << fmt17(corr.lags[k]) << ',' << fmt17(corr.normalized_correlation[k]) << ','
            << fmt17(rhs) << '\n';
    }
}

void write_epsilon_json(const std::filesystem::path& path, const CorrelationResult& corr,
                        const EpsilonEstimate& eps)
{
    nlohmann::ordered_json j;
    j["sigma2_L"] = eps.sigma2_L;
    j["sigma2_Ldot"] = eps.sigma2_Ldot;
    j["epsilon_eq6"] = eps.epsilon_ratio;
    j["epsilon_eq8"] = eps.epsilon_product;
    j["epsilon_chain"] = eps.epsilon_chain;
    j["epsilon_predicted"] = std::sqrt(2.0 / 3.0) / corr.beta;
    if (corr.decorrelation_time) {
        j["decorrelation_time"] = *corr.decorrelation_time;
        j["gyroperiods"] = *corr.gyroperiods_to_decorrelate;
    } else {
        j["decorrelation_time"] = "not_reached";
        j["gyroperiods"] = "not_reached";
    }
    j["max_lag"] = corr.lags.empty() ? 0.0 : corr.lags.back();
    j["conventions"] = {
        {"decorrelation_level", "1/e"},
        {"chaos_criterion", "decorrelation_time * beta < 2 pi (one gyration)"},
        {"note", "both thresholds are modelling choices; rethreshold from correlation.csv"}};
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace ocp
