#include "ocp/machines.hpp"

#include "ocp/errors.hpp"
#include "ocp/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ocp {

namespace {

// Splits one CSV line; double quotes protect commas, "" is a literal quote.
std::vector<std::string> split_csv(const std::string& line, std::size_t line_no)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) {
        throw InputError("line " + std::to_string(line_no) + ": unterminated quoted field");
    }
    out.push_back(cur);
    return out;
}

std::string quote_csv(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') {
            out += '"';
        }
        out += ch;
    }
    out += '"';
    return out;
}

double parse_positive(const std::string& text, std::size_t line_no, const char* column)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw InputError("line " + std::to_string(line_no) + ": " + column + " '" + text +
                         "' is not a number");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InputError("line " + std::to_string(line_no) + ": " + column +
                         " must be positive, got " + text);
    }
    return v;
}

std::string fmt17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string px(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

} // namespace

std::string_view to_string(MachineFamily f)
{
    switch (f) {
    case MachineFamily::tokamak:
        return "tokamak";
    case MachineFamily::stellarator:
        return "stellarator";
    case MachineFamily::spherical_tokamak:
        return "spherical_tokamak";
    case MachineFamily::other:
        return "other";
    }
    return "other";
}

LoadedRecords parse_records(std::istream& in)
{
    LoadedRecords out;
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("line 1: missing header '" + std::string(kMachineHeader) + "'");
    }
    strip_cr(line);
    if (line != kMachineHeader) {
        throw InputError("line 1: expected header '" + std::string(kMachineHeader) + "', got '" +
                         line + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> f = split_csv(line, line_no);
        if (f.size() != 5) {
            throw InputError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(f.size()));
        }
        MachineRecord r;
        r.name = f[0];
        if (r.name.empty()) {
            throw InputError("line " + std::to_string(line_no) + ": machine name is empty");
        }
        if (f[1] == "tokamak") {
            r.family = MachineFamily::tokamak;
        } else if (f[1] == "stellarator") {
            r.family = MachineFamily::stellarator;
        } else if (f[1] == "spherical_tokamak") {
            r.family = MachineFamily::spherical_tokamak;
        } else {
            r.family = MachineFamily::other;
            if (f[1] != "other") {
                out.warnings.push_back("line " + std::to_string(line_no) + ": unknown family '" +
                                       f[1] + "' mapped to other");
            }
        }
        r.field_B = parse_positive(f[2], line_no, "B_tesla");
        r.density_limit_n = parse_positive(f[3], line_no, "n_limit_per_m3");
        r.reference = f[4];
        out.records.push_back(std::move(r));
    }
    return out;
}

LoadedRecords load_records(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    return parse_records(in);
}

void write_records(std::ostream& out, const std::vector<MachineRecord>& records)
{
    out << kMachineHeader << '\n';
    for (const MachineRecord& r : records) {
        out << quote_csv(r.name) << ',' << to_string(r.family) << ',' << fmt17(r.field_B) << ','
            << fmt17(r.density_limit_n) << ',' << quote_csv(r.reference) << '\n';
    }
}

void save_records(const std::filesystem::path& path, const std::vector<MachineRecord>& records)
{
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    write_records(out, records);
}

std::vector<Residual> residuals(const std::vector<MachineRecord>& records)
{
    std::vector<Residual> out;
    out.reserve(records.size());
    for (const MachineRecord& r : records) {
        Residual res;
        res.record = r;
        res.n_predicted = density_limit(r.field_B);
        res.ratio = r.density_limit_n / res.n_predicted;
        res.log10_ratio = std::log10(res.ratio);
        out.push_back(std::move(res));
    }
    return out;
}

void write_residuals_csv(std::ostream& out, const std::vector<Residual>& rows)
{
    out << "machine,family,B_tesla,n_observed,n_predicted,ratio,log10_ratio\n";
    for (const Residual& r : rows) {
        out << quote_csv(r.record.name) << ',' << to_string(r.record.family) << ','
            << fmt17(r.record.field_B) << ',' << fmt17(r.record.density_limit_n) << ','
            << fmt17(r.n_predicted) << ',' << fmt17(r.ratio) << ',' << fmt17(r.log10_ratio) << '\n';
    }
}

void write_residuals_csv(const std::filesystem::path& path, const std::vector<Residual>& rows)
{
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    write_residuals_csv(out, rows);
}

FigureLayout::FigureLayout(double b_min, double b_max, double n_min, double n_max)
{
    if (!(b_min > 0.0) || !(b_max > b_min) || !std::isfinite(b_max)) {
        throw DomainError("B range must satisfy 0 < min < max");
    }
    if (!(n_min > 0.0) || !(n_max >= n_min)) {
        throw DomainError("density range must be positive");
    }
    lb_min_ = std::log10(b_min);
    lb_max_ = std::log10(b_max);
    dn_min_ = static_cast<int>(std::floor(std::log10(n_min)));
    dn_max_ = static_cast<int>(std::ceil(std::log10(n_max)));
    if (dn_max_ == dn_min_) {
        ++dn_max_;
    }
    per_decade_ = (kWidth - kMarginLeft - kMarginRight) / (lb_max_ - lb_min_);
}

double FigureLayout::x(double b) const noexcept
{
    return kMarginLeft + (std::log10(b) - lb_min_) * per_decade_;
}

double FigureLayout::y(double n) const noexcept
{
    return kMarginTop + (static_cast<double>(dn_max_) - std::log10(n)) * per_decade_;
}

double FigureLayout::height() const noexcept
{
    return kMarginTop + kMarginBottom + static_cast<double>(dn_max_ - dn_min_) * per_decade_;
}

FigureLayout figure_layout(const std::vector<MachineRecord>& records, double b_min, double b_max)
{
    if (!(b_min > 0.0) || !(b_max > b_min)) {
        throw DomainError("B range must satisfy 0 < min < max");
    }
    double n_lo = density_limit(b_min);
    double n_hi = density_limit(b_max);
    for (const MachineRecord& r : records) {
        n_lo = std::min(n_lo, r.density_limit_n);
        n_hi = std::max(n_hi, r.density_limit_n);
    }
    return FigureLayout(b_min, b_max, n_lo, n_hi);
}

std::string render_figure(const std::vector<MachineRecord>& records, double b_min, double b_max)
{
    const FigureLayout lay = figure_layout(records, b_min, b_max);
    const double w = FigureLayout::kWidth;
    const double h = lay.height();
    const double left = FigureLayout::kMarginLeft;
    const double right = w - FigureLayout::kMarginRight;
    const double top = FigureLayout::kMarginTop;
    const double bottom = h - FigureLayout::kMarginBottom;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(w) << "\" height=\""
        << px(h) << "\" viewBox=\"0 0 " << px(w) << ' ' << px(h) << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << px(w) << "\" height=\"" << px(h)
        << "\" fill=\"white\"/>\n";
    svg << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(bottom) << "\" x2=\"" << px(right)
        << "\" y2=\"" << px(bottom) << "\"/>\n";
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left)
        << "\" y2=\"" << px(bottom) << "\"/>\n";
    for (int d = static_cast<int>(std::ceil(lay.log_b_min() - 1e-9));
         d <= static_cast<int>(std::floor(lay.log_b_max() + 1e-9)); ++d) {
        const double x = lay.x(std::pow(10.0, d));
        svg << "<line x1=\"" << px(x) << "\" y1=\"" << px(bottom) << "\" x2=\"" << px(x)
            << "\" y2=\"" << px(bottom + 6.0) << "\"/>\n";
    }
    for (int d = lay.decade_n_min(); d <= lay.decade_n_max(); ++d) {
        const double y = lay.y(std::pow(10.0, d));
        svg << "<line x1=\"" << px(left - 6.0) << "\" y1=\"" << px(y) << "\" x2=\"" << px(left)
            << "\" y2=\"" << px(y) << "\"/>\n";
    }
    svg << "</g>\n";
    svg << "<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"14\">\n";
    for (int d = static_cast<int>(std::ceil(lay.log_b_min() - 1e-9));
         d <= static_cast<int>(std::floor(lay.log_b_max() + 1e-9)); ++d) {
        svg << "<text x=\"" << px(lay.x(std::pow(10.0, d))) << "\" y=\"" << px(bottom + 24.0)
            << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
    }
    for (int d = lay.decade_n_min(); d <= lay.decade_n_max(); ++d) {
        svg << "<text x=\"" << px(left - 10.0) << "\" y=\"" << px(lay.y(std::pow(10.0, d)) + 5.0)
            << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<text class=\"axis-label\" x=\"" << px(0.5 * (left + right)) << "\" y=\""
        << px(h - 20.0) << "\" font-family=\"sans-serif\" font-size=\"16\" "
        << "text-anchor=\"middle\">B [T]</text>\n";
    svg << "<text class=\"axis-label\" x=\"24\" y=\"" << px(0.5 * (top + bottom))
        << "\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 24 " << px(0.5 * (top + bottom)) << ")\">n [m⁻³]</text>\n";

    // n = (3/2)(eps0/m) B^2 is a straight line in log-log space; two points suffice.
    svg << "<polyline class=\"density-limit\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" "
        << "stroke-dasharray=\"2,4\" points=\"" << px(lay.x(b_min)) << ','
        << px(lay.y(density_limit(b_min))) << ' ' << px(lay.x(b_max)) << ','
        << px(lay.y(density_limit(b_max))) << "\"/>\n";

    svg << "<g class=\"markers\" stroke=\"black\" stroke-width=\"1\">\n";
    for (const MachineRecord& r : records) {
        const double x = lay.x(r.field_B);
        const double y = lay.y(r.density_limit_n);
        const std::string cls = "marker " + std::string(to_string(r.family));
        switch (r.family) {
        case MachineFamily::tokamak:
            svg << "<circle class=\"" << cls << "\" cx=\"" << px(x) << "\" cy=\"" << px(y)
                << "\" r=\"5\" fill=\"#1f77b4\"/>\n";
            break;
        case MachineFamily::stellarator:
            svg << "<rect class=\"" << cls << "\" x=\"" << px(x - 5.0) << "\" y=\"" << px(y - 5.0)
                << "\" width=\"10\" height=\"10\" fill=\"#2ca02c\"/>\n";
            break;
        case MachineFamily::spherical_tokamak:
            svg << "<polygon class=\"" << cls << "\" points=\"" << px(x) << ',' << px(y - 6.0)
                << ' ' << px(x + 6.0) << ',' << px(y + 4.0) << ' ' << px(x - 6.0) << ','
                << px(y + 4.0) << "\" fill=\"#d62728\"/>\n";
            break;
        case MachineFamily::other:
            svg << "<polygon class=\"" << cls << "\" points=\"" << px(x) << ',' << px(y - 6.0)
                << ' ' << px(x + 6.0) << ',' << px(y) << ' ' << px(x) << ',' << px(y + 6.0) << ' '
                << px(x - 6.0) << ',' << px(y) << "\" fill=\"#7f7f7f\"/>\n";
            break;
        }
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

void export_figure(const std::vector<MachineRecord>& records, double b_min, double b_max,
                   const std::filesystem::path& path)
{
    const std::string svg = render_figure(records, b_min, b_max);
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << svg;
}

} // namespace ocp
