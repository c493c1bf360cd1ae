#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ocp {

enum class MachineFamily { tokamak, stellarator, spherical_tokamak, other };

std::string_view to_string(MachineFamily f);

/// One empirical density-limit point.
struct MachineRecord {
    std::string name;
    MachineFamily family = MachineFamily::other;
    double field_B = 0.0; ///< tesla
    double density_limit_n = 0.0; ///< 1/m^3
    std::string reference;

    friend bool operator==(const MachineRecord&, const MachineRecord&) = default;
};

struct LoadedRecords {
    std::vector<MachineRecord> records;
    std::vector<std::string> warnings; ///< e.g. unknown families mapped to other
};

inline constexpr std::string_view kMachineHeader = "machine,family,B_tesla,n_limit_per_m3,reference";

/// Parses CSV with the exact header above. Fields may be double-quoted. Malformed rows
/// throw InputError naming the line.
LoadedRecords parse_records(std::istream& in);
LoadedRecords load_records(const std::filesystem::path& path);
void write_records(std::ostream& out, const std::vector<MachineRecord>& records);
void save_records(const std::filesystem::path& path, const std::vector<MachineRecord>& records);

struct Residual {
    MachineRecord record;
    double n_predicted = 0.0; ///< density_limit(B)
    double ratio = 0.0; ///< observed / predicted
    double log10_ratio = 0.0;
};

std::vector<Residual> residuals(const std::vector<MachineRecord>& records);

/// residuals.csv: machine,family,B_tesla,n_observed,n_predicted,ratio,log10_ratio
void write_residuals_csv(std::ostream& out, const std::vector<Residual>& rows);
void write_residuals_csv(const std::filesystem::path& path, const std::vector<Residual>& rows);

/// Log-log axes with equal pixels per decade on both axes, so a power law of exponent
/// p keeps slope p on screen.
class FigureLayout {
public:
    static constexpr double kWidth = 1000.0;
    static constexpr double kMarginLeft = 110.0;
    static constexpr double kMarginRight = 30.0;
    static constexpr double kMarginTop = 30.0;
    static constexpr double kMarginBottom = 70.0;

    /// x spans [B_min, B_max]; y spans whole decades covering every density.
    FigureLayout(double b_min, double b_max, double n_min, double n_max);

    double x(double b) const noexcept;
    double y(double n) const noexcept;
    double height() const noexcept;
    double pixels_per_decade() const noexcept { return per_decade_; }
    double log_b_min() const noexcept { return lb_min_; }
    double log_b_max() const noexcept { return lb_max_; }
    int decade_n_min() const noexcept { return dn_min_; }
    int decade_n_max() const noexcept { return dn_max_; }

private:
    double lb_min_;
    double lb_max_;
    int dn_min_;
    int dn_max_;
    double per_decade_;
};

/// Layout used by render_figure for the given inputs.
FigureLayout figure_layout(const std::vector<MachineRecord>& records, double b_min, double b_max);

/// Self-contained SVG: records as markers (class "marker <family>"), the density-limit
/// line as the only polyline (dotted), axes labelled B [T] and n [m⁻³].
std::string render_figure(const std::vector<MachineRecord>& records, double b_min, double b_max);
void export_figure(const std::vector<MachineRecord>& records, double b_min, double b_max,
                   const std::filesystem::path& path);

} // namespace ocp
