#include "ocp/sweep.hpp"

#include "ocp/errors.hpp"
#include "ocp/observables.hpp"
#include "ocp/params.hpp"
#include "ocp/sampler.hpp"
#include "ocp/seeding.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace ocp {

namespace {

std::string fmt17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SweepRow run_point(const SweepConfig& cfg, double beta, std::size_t index)
{
    const std::uint64_t seed = derive_seed(cfg.seed, Stream::sweep_point, index);
    SweepConfig local = cfg;
    const double dt = cfg.sim.dt > 0.0 ? cfg.sim.dt : IntegratorConfig::default_dt(beta, cfg.gamma);
    const double span = cfg.min_span_gyroperiods * 2.0 * std::numbers::pi / beta;
    const std::size_t stride = std::max<std::size_t>(cfg.sim.record_stride, 1);
    const auto needed = static_cast<std::size_t>(std::ceil(span / dt / static_cast<double>(stride)));
    local.sim.steps = std::max(cfg.sim.steps, needed * stride);
    const PointRun point = simulate_point(local, beta, seed);
    const RunResult& run = point.run;
    const IntegratorConfig& sim = point.sim;
    AutocorrelationOptions ac;
    ac.seed = seed;
    const CorrelationResult corr = analyze_trajectory(run.record, std::nullopt, ac);
    const EpsilonEstimate eps = epsilon_measured(run.record);

    SweepRow row;
    row.beta = beta;
    row.gamma = cfg.gamma;
    row.count = cfg.count;
    row.epsilon_predicted = epsilon_from_beta(beta);
    row.epsilon_measured = eps.epsilon_ratio;
    row.epsilon_chain = eps.epsilon_chain;
    row.decorrelation_gyroperiods = corr.gyroperiods_to_decorrelate;
    row.max_lag_gyroperiods =
        (corr.lags.empty() ? 0.0 : corr.lags.back()) * beta / (2.0 * std::numbers::pi);
    row.energy_drift = run.energy_drift;
    row.energy_drift_flag = run.drift_flag;
    row.dt = sim.dt;
    row.steps = sim.steps;

    if (cfg.divergence_steps > 0) {
        IntegratorConfig div = sim;
        div.steps = cfg.divergence_steps;
        div.record_stride = 1;
        DivergenceOptions opts;
        opts.seed = seed;
        row.divergence_rate = trajectory_divergence(run.final_state, div, opts).rate;
    }
    return row;
}

// Gyroperiods used for ordering: the measured value, or the lower bound when the
// correlation never dropped below 1/e.
double effective_gyroperiods(const SweepRow& r)
{
    return r.decorrelation_gyroperiods.value_or(r.max_lag_gyroperiods);
}

} // namespace

std::vector<double> default_sweep_betas()
{
    constexpr std::size_t count = 8;
    const double lo = std::log(0.2);
    const double hi = std::log(4.0);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
    }
    return out;
}

PointRun simulate_point(const SweepConfig& cfg, double beta, std::uint64_t seed)
{
    MetropolisConfig mc;
    mc.gamma = cfg.gamma;
    mc.count = cfg.count;
    mc.sweeps = cfg.metropolis_sweeps;
    mc.seed = seed;
    mc.ewald_target = cfg.sim.ewald_target;
    ParticleSystem sys = metropolis_sample(mc).state;
    sys.set_velocities(sample_velocities(cfg.count, seed));

    IntegratorConfig sim = cfg.sim;
    sim.beta = beta;
    sim.gamma = cfg.gamma;
    if (!(sim.dt > 0.0)) {
        sim.dt = IntegratorConfig::default_dt(beta, cfg.gamma);
    }

    IntegratorConfig eq = sim;
    eq.steps = cfg.equilibration_steps;
    eq.record_stride = 1;
    eq.thermostat = Thermostat{};
    if (eq.steps > 0) {
        sys = equilibrate(sys, eq).state;
    }

    sim.thermostat.reset();
    return {run_nve(sys, sim), sim};
}

SweepResult run_sweep(const SweepConfig& cfg, const SweepProgress& progress)
{
    if (cfg.betas.empty()) {
        throw DomainError("sweep needs at least one beta");
    }
    for (double b : cfg.betas) {
        if (!(b > 0.0) || !std::isfinite(b)) {
            throw DomainError("sweep betas must be positive, got " + std::to_string(b));
        }
    }
    if (!(cfg.gamma > 0.0)) {
        throw DomainError("gamma must be positive, got " + std::to_string(cfg.gamma));
    }
    std::vector<double> betas = cfg.betas;
    std::sort(betas.begin(), betas.end());
    if (std::adjacent_find(betas.begin(), betas.end()) != betas.end()) {
        throw DomainError("sweep betas must be distinct");
    }

    SweepResult result;
    result.rows.resize(betas.size());
    std::vector<std::exception_ptr> errors(betas.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < betas.size(); i = next++) {
            try {
                result.rows[i] = run_point(cfg, betas[i], i);
                if (progress) {
                    const std::lock_guard<std::mutex> lock(progress_mutex);
                    progress(result.rows[i]);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, betas.size());
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (std::size_t j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    const ThresholdEstimate t = locate_threshold(result.rows);
    result.located_threshold_beta = t.beta;
    result.threshold_uses_lower_bound = t.uses_lower_bound;
    result.decorrelation_monotone = decorrelation_nondecreasing(result.rows);
    if (!result.decorrelation_monotone) {
        result.diagnostics.push_back("decorrelation gyroperiods decrease with beta somewhere");
    }
    for (const SweepRow& r : result.rows) {
        if (r.energy_drift_flag) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "beta = %.6g: energy drift %.3g exceeds %.0e", r.beta,
                          r.energy_drift, kEnergyDriftLimit);
            result.diagnostics.emplace_back(buf);
        }
        const double rel = std::abs(r.epsilon_measured - r.epsilon_chain) /
                           std::max(r.epsilon_chain, std::numeric_limits<double>::min());
        if (rel > 0.1) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "beta = %.6g: epsilon %.4g differs from the independence chain %.4g by %.0f%%",
                          r.beta, r.epsilon_measured, r.epsilon_chain, 100.0 * rel);
            result.diagnostics.emplace_back(buf);
        }
    }
    return result;
}

ThresholdEstimate locate_threshold(const std::vector<SweepRow>& rows)
{
    // Usable points: (beta, gyroperiods, is_lower_bound).
    struct Point {
        double beta;
        double g;
        bool bound;
    };
    std::vector<Point> pts;
    for (const SweepRow& r : rows) {
        if (r.decorrelation_gyroperiods) {
            pts.push_back({r.beta, *r.decorrelation_gyroperiods, false});
        } else if (r.max_lag_gyroperiods >= 1.0) {
            pts.push_back({r.beta, r.max_lag_gyroperiods, true});
        }
    }
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.beta < b.beta; });
    ThresholdEstimate out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Point& a = pts[i];
        const Point& b = pts[i + 1];
        const bool below_a = a.g < 1.0;
        const bool below_b = b.g < 1.0;
        if (below_a == below_b || !(a.g > 0.0) || !(b.g > 0.0)) {
            continue;
        }
        const double la = std::log(a.g);
        const double lb = std::log(b.g);
        const double f = (0.0 - la) / (lb - la);
        out.beta = a.beta + f * (b.beta - a.beta);
        out.uses_lower_bound = a.bound || b.bound;
        return out;
    }
    return out;
}

bool decorrelation_nondecreasing(const std::vector<SweepRow>& rows)
{
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const SweepRow& a = rows[i];
        const SweepRow& b = rows[i + 1];
        // Measured value above a later measured value is a decrease. A later row that
        // never decorrelated can only be compared through its lower bound.
        if (a.decorrelation_gyroperiods && b.decorrelation_gyroperiods &&
            *b.decorrelation_gyroperiods < *a.decorrelation_gyroperiods) {
            return false;
        }
        if (!a.decorrelation_gyroperiods && b.decorrelation_gyroperiods &&
            *b.decorrelation_gyroperiods < effective_gyroperiods(a)) {
            return false;
        }
    }
    return true;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result)
{
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << "beta,gamma,N,epsilon_predicted,epsilon_measured,decorrelation_gyroperiods,"
           "divergence_rate,energy_drift_flag\n";
    for (const SweepRow& r : result.rows) {
        out << fmt17(r.beta) << ',' << fmt17(r.gamma) << ',' << r.count << ','
            << fmt17(r.epsilon_predicted) << ',' << fmt17(r.epsilon_measured) << ','
            << (r.decorrelation_gyroperiods ? fmt17(*r.decorrelation_gyroperiods) : "not_reached")
            << ',' << fmt17(r.divergence_rate) << ',' << (r.energy_drift_flag ? "true" : "false")
            << '\n';
    }
}

void write_threshold_json(const std::filesystem::path& path, const SweepResult& result)
{
    nlohmann::ordered_json j;
    if (result.located_threshold_beta) {
        j["located_threshold_beta"] = *result.located_threshold_beta;
    } else {
        j["located_threshold_beta"] = "not_bracketed";
    }
    j["conjectured_threshold_beta"] = std::sqrt(2.0 / 3.0);
    j["threshold_uses_lower_bound"] = result.threshold_uses_lower_bound;
    j["decorrelation_monotone"] = result.decorrelation_monotone;
    j["criterion"] = "decorrelation_time * beta / (2 pi) = 1, correlation level 1/e";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const SweepRow& r : result.rows) {
        nlohmann::ordered_json row;
        row["beta"] = r.beta;
        row["dt"] = r.dt;
        row["steps"] = r.steps;
        row["epsilon_predicted"] = r.epsilon_predicted;
        row["epsilon_measured"] = r.epsilon_measured;
        row["epsilon_chain"] = r.epsilon_chain;
        if (r.decorrelation_gyroperiods) {
            row["decorrelation_gyroperiods"] = *r.decorrelation_gyroperiods;
        } else {
            row["decorrelation_gyroperiods"] = "not_reached";
        }
        row["max_lag_gyroperiods"] = r.max_lag_gyroperiods;
        row["divergence_rate"] = r.divergence_rate;
        row["energy_drift"] = r.energy_drift;
        rows.push_back(row);
    }
    j["rows"] = rows;
    j["diagnostics"] = result.diagnostics;
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace ocp
