#include "ocp/dynamics.hpp"

#include "ocp/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace ocp {

namespace {

constexpr const char* kTrajectoryHeader = "t,particle,vperp_x,vperp_y,Eperp_x,Eperp_y,KE_total,PE_total";

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path)
{
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

std::string fmt17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_field(const std::string& text, std::size_t line, const char* name)
{
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw InputError("trajectory line " + std::to_string(line) + ": bad " + name + " '" +
                         text + "'");
    }
    return value;
}

} // namespace

void save_trajectory(const TrajectoryRecord& rec, const std::filesystem::path& csv_path)
{
    std::ofstream csv(csv_path);
    if (!csv) {
        throw InputError("cannot write " + csv_path.string());
    }
    csv << kTrajectoryHeader << '\n';
    const std::size_t n = rec.count();
    for (std::size_t r = 0; r < rec.records(); ++r) {
        const std::string t = fmt17(rec.times[r]);
        const std::string ke = fmt17(rec.kinetic_total[r]);
        const std::string pe = fmt17(rec.potential_total[r]);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& v = rec.v(r, i);
            const Vec2& e = rec.e(r, i);
            csv << t << ',' << i << ',' << fmt17(v.x) << ',' << fmt17(v.y) << ','
                << fmt17(e.x) << ',' << fmt17(e.y) << ',' << ke << ',' << pe << '\n';
        }
    }
    if (!csv) {
        throw InputError("failed writing " + csv_path.string());
    }

    nlohmann::ordered_json meta;
    meta["beta"] = rec.meta.beta;
    meta["gamma"] = rec.meta.gamma;
    meta["N"] = rec.meta.count;
    meta["seed"] = rec.meta.seed;
    meta["dt"] = rec.meta.dt;
    meta["steps"] = rec.meta.steps;
    meta["record_stride"] = rec.meta.record_stride;
    meta["records"] = rec.records();
    meta["units"] = {{"time", "1/omega_p"},
                     {"vperp", "sqrt(k_B T / m)"},
                     {"Eperp", "acceleration, sqrt(Gamma/3) * reduced field"},
                     {"energy", "k_B T"}};
    std::ofstream side(sidecar_path(csv_path));
    side << meta.dump(2) << '\n';
    if (!side) {
        throw InputError("failed writing " + sidecar_path(csv_path).string());
    }
}

TrajectoryRecord load_trajectory(const std::filesystem::path& csv_path)
{
    std::ifstream side(sidecar_path(csv_path));
    if (!side) {
        throw InputError("missing trajectory metadata " + sidecar_path(csv_path).string());
    }
    TrajectoryRecord rec;
    try {
        const nlohmann::json meta = nlohmann::json::parse(side);
        rec.meta.beta = meta.at("beta").get<double>();
        rec.meta.gamma = meta.at("gamma").get<double>();
        rec.meta.count = meta.at("N").get<std::size_t>();
        rec.meta.seed = meta.at("seed").get<std::uint64_t>();
        rec.meta.dt = meta.at("dt").get<double>();
        rec.meta.steps = meta.at("steps").get<std::size_t>();
        rec.meta.record_stride = meta.at("record_stride").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad trajectory metadata: " + std::string(e.what()));
    }
    const std::size_t n = rec.meta.count;
    if (n == 0) {
        throw InputError("trajectory metadata has N = 0");
    }

    std::ifstream csv(csv_path);
    if (!csv) {
        throw InputError("cannot read " + csv_path.string());
    }
    std::string line;
    if (!std::getline(csv, line) || line != kTrajectoryHeader) {
        throw InputError("trajectory line 1: expected header '" + std::string(kTrajectoryHeader) +
                         "'");
    }
    std::size_t line_no = 1;
    std::size_t row = 0;
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        cells.clear();
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 8) {
            throw InputError("trajectory line " + std::to_string(line_no) + ": expected 8 fields, got " +
                             std::to_string(cells.size()));
        }
        const std::size_t particle = row % n;
        if (cells[1] != std::to_string(particle)) {
            throw InputError("trajectory line " + std::to_string(line_no) + ": expected particle " +
                             std::to_string(particle));
        }
        const double t = parse_field(cells[0], line_no, "t");
        if (particle == 0) {
            rec.times.push_back(t);
            rec.kinetic_total.push_back(parse_field(cells[6], line_no, "KE_total"));
            rec.potential_total.push_back(parse_field(cells[7], line_no, "PE_total"));
        }
        rec.vperp.push_back({parse_field(cells[2], line_no, "vperp_x"),
                             parse_field(cells[3], line_no, "vperp_y")});
        rec.eperp.push_back({parse_field(cells[4], line_no, "Eperp_x"),
                             parse_field(cells[5], line_no, "Eperp_y")});
        ++row;
    }
    if (row % n != 0) {
        throw InputError("trajectory ends mid-record: " + std::to_string(row) + " rows for N = " +
                         std::to_string(n));
    }
    return rec;
}

} // namespace ocp
