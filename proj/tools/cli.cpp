#include "cli.hpp"

#include "ocp/errors.hpp"
#include "ocp/machines.hpp"
#include "ocp/observables.hpp"
#include "ocp/params.hpp"
#include "ocp/sampler.hpp"
#include "ocp/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

namespace ocp::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Globals {
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::size_t jobs = 1;
    std::string log_level = "info";
    std::string config;
};

struct PredictArgs {
    double field_B = 0.0;
    std::optional<double> density_n;
    std::string temperature;
    std::size_t particles = MetropolisConfig{}.count;
};

struct MicrofieldArgs {
    MetropolisConfig mc;
    std::size_t dump_configs = 0;
};

struct SimulateArgs {
    SweepConfig point;
    double beta = IntegratorConfig{}.beta;
    std::optional<double> max_lag;
    std::size_t bootstrap = AutocorrelationOptions{}.bootstrap_replicates;
};

struct FigureArgs {
    std::string records;
    double b_min = 0.1;
    double b_max = 10.0;
};

std::shared_ptr<spdlog::logger> logger()
{
    static const std::shared_ptr<spdlog::logger> log = [] {
        auto l = std::make_shared<spdlog::logger>(
            "ocp_chaos", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        l->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
        return l;
    }();
    return log;
}

// Value of the --config flag, found before parsing so file values can become defaults.
std::optional<std::string> find_config_path(const std::vector<std::string>& args)
{
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            return args[i + 1];
        }
        if (args[i].rfind("--config=", 0) == 0) {
            return args[i].substr(9);
        }
    }
    return std::nullopt;
}

std::string json_to_cli(const json& v)
{
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_array()) {
        std::string out;
        for (const json& item : v) {
            if (!out.empty()) {
                out += ',';
            }
            out += json_to_cli(item);
        }
        return out;
    }
    return v.dump();
}

// Config-file keys become option defaults, so command-line flags still take precedence.
void apply_config(CLI::App& app, const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read config file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config file " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) {
        throw InputError("config file " + path.string() + " must hold a flat JSON object");
    }
    std::vector<CLI::App*> apps{&app};
    for (CLI::App* sub : app.get_subcommands({})) {
        apps.push_back(sub);
    }
    for (const auto& [key, value] : j.items()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        if (name == "config") {
            throw InputError("config file " + path.string() + ": key 'config' is not allowed");
        }
        if (value.is_object()) {
            throw InputError("config file " + path.string() + ": key '" + key +
                             "' must be a scalar or array");
        }
        bool found = false;
        for (CLI::App* a : apps) {
            if (CLI::Option* opt = a->get_option_no_throw("--" + name)) {
                opt->default_val(json_to_cli(value));
                // A value from the file satisfies a required flag.
                opt->required(false);
                found = true;
            }
        }
        if (!found) {
            throw InputError("config file " + path.string() + ": unknown key '" + key + "'");
        }
    }
}

json scalar_to_json(const std::string& s)
{
    if (s.empty()) {
        return nullptr;
    }
    if (s == "true" || s == "false") {
        return s == "true";
    }
    const char* first = s.data();
    const char* last = s.data() + s.size();
    std::uint64_t u = 0;
    if (auto [p, ec] = std::from_chars(first, last, u); ec == std::errc{} && p == last) {
        return u;
    }
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc{} && p == last) {
        return i;
    }
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc{} && p == last) {
        return d;
    }
    return s;
}

json option_to_json(const CLI::Option& opt)
{
    std::vector<std::string> items;
    if (opt.count() > 0) {
        items = opt.results();
    } else {
        std::string d = opt.get_default_str();
        if (d.size() >= 2 && d.front() == '[' && d.back() == ']') {
            d = d.substr(1, d.size() - 2);
        }
        if (opt.get_items_expected_max() > 1) {
            std::stringstream ss(d);
            for (std::string item; std::getline(ss, item, ',');) {
                items.push_back(item);
            }
        } else {
            items.push_back(d);
        }
    }
    if (opt.get_items_expected_max() > 1) {
        json arr = json::array();
        for (const std::string& item : items) {
            arr.push_back(scalar_to_json(item));
        }
        return arr;
    }
    return items.empty() ? json(nullptr) : scalar_to_json(items.back());
}

// Resolved flags of the global app and the chosen subcommand, keyed like the config file.
json resolved_config(const CLI::App& app, const CLI::App& sub)
{
    json j;
    j["subcommand"] = sub.get_name();
    for (const CLI::App* a : {&app, &sub}) {
        for (const CLI::Option* opt : a->get_options()) {
            const std::string name = opt->get_single_name();
            if (name == "help" || name == "config" || opt->get_lnames().empty()) {
                continue;
            }
            j[name] = option_to_json(*opt);
        }
    }
    return j;
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

int run_predict(const PredictArgs& a, const fs::path& dir, std::ostream& out)
{
    if (a.temperature.size() > 0 && !a.density_n) {
        throw DomainError("--T needs --n: the coupling depends on density and temperature");
    }
    const double omega_c = cyclotron_frequency(a.field_B);
    std::optional<double> omega_p;
    std::optional<double> beta;
    std::optional<double> epsilon;
    std::optional<double> gamma;
    std::optional<double> temperature;
    if (a.density_n) {
        omega_p = plasma_frequency(*a.density_n);
        beta = omega_c / *omega_p;
        epsilon = epsilon_from_beta(*beta);
        if (!a.temperature.empty()) {
            temperature = parse_temperature(a.temperature);
            const PlasmaParams p = PlasmaParams::make(*a.density_n, *temperature, a.field_B);
            gamma = to_reduced(p, a.particles).coupling_Gamma;
        }
    }

    json j;
    j["input"] = {{"B_tesla", a.field_B},
                  {"n_per_m3", optional_number(a.density_n)},
                  {"T_kelvin", optional_number(temperature)}};
    j["omega_c_rad_per_s"] = omega_c;
    j["omega_p_rad_per_s"] = optional_number(omega_p);
    j["gamma"] = optional_number(gamma);
    j["beta"] = optional_number(beta);
    j["epsilon"] = optional_number(epsilon);
    j["n_limit_per_m3"] = density_limit(a.field_B);
    write_json(dir / "predict.json", j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int run_microfield(const MicrofieldArgs& a, std::uint64_t seed, const fs::path& dir,
                   std::ostream& out)
{
    MetropolisConfig mc = a.mc;
    mc.seed = seed;
    mc.validate();
    const double box = ParticleSystem::box_length_for(mc.count);
    const EwaldSummation ewald(box, mc.count, EwaldConfig::tuned(box, mc.count, mc.ewald_target));
    MicrofieldAccumulator acc;
    if (a.dump_configs > 0) {
        fs::create_directories(dir / "configs");
    }
    const SamplingResult sampled =
        metropolis_sample(mc, [&](const ParticleSystem& sys, std::size_t index) {
            acc.add(ewald.field(sys.positions()));
            if (index < a.dump_configs) {
                char name[32];
                std::snprintf(name, sizeof name, "config_%06zu.ocp", index);
                std::ofstream f(dir / "configs" / name);
                write_ocp(f, sys);
            }
        });
    const SamplingDiagnostics& diag = sampled.diagnostics;
    for (const std::string& w : diag.warnings) {
        logger()->warn("{}", w);
    }
    if (acc.config_count() == 0) {
        throw InputError("no configurations were recorded; increase --sweeps");
    }
    const MicrofieldStats stats = acc.stats();
    const IlmReport ilm = ilm_check(stats, mc.gamma);

    json hist = json::array();
    const double width = stats.histogram.bin_width();
    for (std::size_t b = 0; b < stats.histogram.density.size(); ++b) {
        hist.push_back({{"E_low", width * static_cast<double>(b)},
                        {"E_high", width * static_cast<double>(b + 1)},
                        {"density", stats.histogram.density[b]}});
    }
    json j;
    j["gamma"] = mc.gamma;
    j["N"] = mc.count;
    j["variance_total"] = stats.variance_total;
    j["predicted_3_over_gamma"] = ilm.predicted;
    j["ratio"] = ilm.ratio;
    j["stderr"] = stats.stderr_variance;
    j["variance_transverse"] = stats.variance_transverse;
    j["transverse_fraction"] = stats.variance_transverse / stats.variance_total;
    j["mean_field"] = {stats.mean_field.x, stats.mean_field.y, stats.mean_field.z};
    j["configurations"] = stats.config_count;
    j["samples"] = stats.sample_count;
    j["acceptance_rate"] = diag.acceptance_rate;
    j["step_size"] = diag.step_size;
    j["record_stride_sweeps"] = diag.record_stride;
    j["warnings"] = diag.warnings;
    j["histogram_overflow"] = stats.histogram.overflow;
    j["histogram"] = std::move(hist);
    write_json(dir / "microfield.json", j);
    out << "variance_total " << stats.variance_total << " (3/gamma = " << ilm.predicted
        << ", ratio " << ilm.ratio << ")\n";
    return kExitOk;
}

int run_simulate(const SimulateArgs& a, std::uint64_t seed, const fs::path& dir,
                 std::ostream& out)
{
    const PointRun point = simulate_point(a.point, a.beta, seed);
    const RunResult& run = point.run;
    if (run.drift_flag) {
        logger()->warn("energy drift {:.3g} exceeds {:.0e}", run.energy_drift, kEnergyDriftLimit);
    }
    save_trajectory(run.record, dir / "trajectory.csv");

    AutocorrelationOptions ac;
    ac.bootstrap_replicates = a.bootstrap;
    ac.seed = seed;
    const CorrelationResult corr = analyze_trajectory(run.record, a.max_lag, ac);
    const EpsilonEstimate eps = epsilon_measured(run.record);
    const BoundReport bound = shorttime_bound_check(corr, eps.epsilon_ratio, a.beta);
    write_correlation_csv(dir / "correlation.csv", corr, bound);
    write_epsilon_json(dir / "epsilon.json", corr, eps);

    out << "epsilon_measured " << eps.epsilon_ratio << " (predicted " << epsilon_from_beta(a.beta)
        << "), energy drift " << run.energy_drift << ", short-time bound "
        << (bound.pass ? "respected" : "violated") << '\n';
    return kExitOk;
}

int run_sweep_cmd(const SweepConfig& cfg, const fs::path& dir, std::ostream& out)
{
    const SweepResult result = run_sweep(cfg, [](const SweepRow& row) {
        logger()->info("beta {:.4g}: epsilon {:.4g}, decorrelation {} gyroperiods", row.beta,
                       row.epsilon_measured,
                       row.decorrelation_gyroperiods
                           ? std::to_string(*row.decorrelation_gyroperiods)
                           : "> " + std::to_string(row.max_lag_gyroperiods));
    });
    for (const std::string& d : result.diagnostics) {
        logger()->warn("{}", d);
    }
    write_sweep_csv(dir / "sweep.csv", result);
    write_threshold_json(dir / "threshold.json", result);
    if (result.located_threshold_beta) {
        out << "threshold beta " << *result.located_threshold_beta << " (conjectured "
            << epsilon_from_beta(1.0) << ")\n";
    } else {
        out << "threshold not bracketed\n";
    }
    return kExitOk;
}

int run_figure(const FigureArgs& a, const fs::path& dir, std::ostream& out)
{
    LoadedRecords loaded;
    if (!a.records.empty()) {
        loaded = load_records(a.records);
    }
    for (const std::string& w : loaded.warnings) {
        logger()->warn("{}", w);
    }
    export_figure(loaded.records, a.b_min, a.b_max, dir / "figure.svg");
    write_residuals_csv(dir / "residuals.csv", residuals(loaded.records));
    out << loaded.records.size() << " records plotted\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"One-component plasma chaos-threshold toolkit", "ocp_chaos"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.fallthrough();
    // Parse errors print the message followed by the full usage text.
    app.failure_message(CLI::FailureMessage::help);

    Globals g;
    app.add_option("--seed", g.seed, "Global 64-bit seed for every random stream");
    app.add_option("--output-dir", g.output_dir, "Directory for output files");
    app.add_option("--jobs", g.jobs, "Worker threads for sweep")
        ->envname("OCP_CHAOS_JOBS")
        ->check(CLI::PositiveNumber);
    app.add_option("--log-level", g.log_level, "Log verbosity")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    app.add_option("--config", g.config, "Flat JSON file with flag values as defaults");

    PredictArgs pa;
    CLI::App* predict = app.add_subcommand("predict", "Threshold quantities for SI parameters");
    predict->add_option("--B", pa.field_B, "Magnetic field [T]")
        ->required()
        ->check(CLI::PositiveNumber);
    predict->add_option("--n", pa.density_n, "Electron density [m^-3]")
        ->check(CLI::PositiveNumber);
    predict->add_option("--T", pa.temperature, "Temperature with unit, e.g. 1keV or 300K");
    predict->add_option("--particles", pa.particles, "N used for the reduced parameters")
        ->check(CLI::PositiveNumber);

    MicrofieldArgs ma;
    CLI::App* microfield = app.add_subcommand("microfield", "Metropolis microfield statistics");
    microfield->add_option("--gamma", ma.mc.gamma, "Coupling parameter")
        ->check(CLI::PositiveNumber);
    microfield->add_option("--particles", ma.mc.count, "Number of particles");
    microfield->add_option("--sweeps", ma.mc.sweeps, "Metropolis sweeps including burn-in");
    microfield->add_option("--burn-in-fraction", ma.mc.burn_in_fraction,
                           "Fraction of sweeps discarded");
    microfield->add_option("--record-stride", ma.mc.record_stride,
                           "Sweeps between records (automatic when absent)");
    microfield->add_option("--ewald-target", ma.mc.ewald_target, "Ewald accuracy target");
    microfield->add_option("--dump-configs", ma.dump_configs,
                           "Write the first K recorded configurations as ocp v1 files");

    SimulateArgs sa;
    sa.point.sim = IntegratorConfig{};
    sa.point.sim.dt = 0.0;
    CLI::App* simulate = app.add_subcommand("simulate", "One magnetized run with its analysis");
    simulate->add_option("--gamma", sa.point.gamma, "Coupling parameter")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--beta", sa.beta, "omega_c / omega_p")->check(CLI::PositiveNumber);
    simulate->add_option("--particles", sa.point.count, "Number of particles");
    simulate->add_option("--steps", sa.point.sim.steps, "Energy-conserving steps");
    simulate->add_option("--dt", sa.point.sim.dt, "Time step [1/omega_p]; 0 selects the default");
    simulate->add_option("--record-stride", sa.point.sim.record_stride, "Steps between records");
    simulate->add_option("--equilibration-steps", sa.point.equilibration_steps,
                         "Thermostatted steps before the run");
    simulate->add_option("--metropolis-sweeps", sa.point.metropolis_sweeps,
                         "Sweeps for the initial configuration");
    simulate->add_option("--max-lag", sa.max_lag, "Largest correlation lag [1/omega_p]");
    simulate->add_option("--bootstrap", sa.bootstrap, "Bootstrap replicates for the stderr");

    SweepConfig sw;
    sw.betas = default_sweep_betas();
    CLI::App* sweep = app.add_subcommand("sweep", "Decorrelation versus beta at fixed gamma");
    sweep->add_option("--gamma", sw.gamma, "Coupling parameter")->check(CLI::PositiveNumber);
    sweep->add_option("--betas", sw.betas, "Comma-separated beta values")->delimiter(',');
    sweep->add_option("--particles", sw.count, "Number of particles");
    sweep->add_option("--steps", sw.sim.steps, "Energy-conserving steps per point");
    sweep->add_option("--dt", sw.sim.dt, "Time step [1/omega_p]; 0 selects the default per beta");
    sweep->add_option("--record-stride", sw.sim.record_stride, "Steps between records");
    sweep->add_option("--equilibration-steps", sw.equilibration_steps,
                      "Thermostatted steps per point");
    sweep->add_option("--metropolis-sweeps", sw.metropolis_sweeps,
                      "Sweeps for each initial configuration");
    sweep->add_option("--divergence-steps", sw.divergence_steps,
                      "Steps of twin-trajectory divergence per point");

    FigureArgs fa;
    CLI::App* figure = app.add_subcommand("figure", "Density-limit comparison figure");
    figure->add_option("--records", fa.records, "Machine CSV; empty draws the line only");
    figure->add_option("--B-min", fa.b_min, "Lower field bound [T]")->check(CLI::PositiveNumber);
    figure->add_option("--B-max", fa.b_max, "Upper field bound [T]")->check(CLI::PositiveNumber);

    try {
        if (const auto path = find_config_path(args)) {
            apply_config(app, *path);
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    logger()->set_level(spdlog::level::from_str(g.log_level));
    CLI::App* chosen = app.get_subcommands().front();
    try {
        const fs::path dir = g.output_dir;
        fs::create_directories(dir);
        write_json(dir / "config.json", resolved_config(app, *chosen));
        logger()->info("{} started, seed {}, output {}", chosen->get_name(), g.seed,
                       dir.string());
        int code = kExitOk;
        if (chosen == predict) {
            code = run_predict(pa, dir, out);
        } else if (chosen == microfield) {
            code = run_microfield(ma, g.seed, dir, out);
        } else if (chosen == simulate) {
            code = run_simulate(sa, g.seed, dir, out);
        } else if (chosen == sweep) {
            sw.seed = g.seed;
            sw.jobs = g.jobs;
            code = run_sweep_cmd(sw, dir, out);
        } else if (chosen == figure) {
            code = run_figure(fa, dir, out);
        }
        logger()->info("{} finished", chosen->get_name());
        return code;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace ocp::cli
