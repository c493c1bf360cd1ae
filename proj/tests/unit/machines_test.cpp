#include "ocp/errors.hpp"
#include "ocp/machines.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

using namespace ocp;

namespace {

// Independent oracle for the predicted line: n = (3/2) eps0 B^2 / m_e with CODATA-2018.
double oracle_limit(double b)
{
    return 1.5 * 8.8541878128e-12 / 9.1093837015e-31 * b * b;
}

LoadedRecords parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_records(in);
}

const std::string kHeader = "machine,family,B_tesla,n_limit_per_m3,reference\n";

struct Point {
    double x;
    double y;
};

std::vector<Point> polyline_points(const std::string& svg, std::size_t& count)
{
    const std::regex poly(R"re(<polyline[^>]*points="([^"]*)")re");
    std::vector<Point> pts;
    count = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), poly); it != std::sregex_iterator(); ++it) {
        ++count;
        std::istringstream ps((*it)[1].str());
        std::string pair;
        while (ps >> pair) {
            const auto comma = pair.find(',');
            pts.push_back({std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1))});
        }
    }
    return pts;
}

std::vector<Point> circle_centres(const std::string& svg)
{
    const std::regex circle(R"re(<circle class="marker[^"]*" cx="([^"]*)" cy="([^"]*)")re");
    std::vector<Point> out;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it) {
        out.push_back({std::stod((*it)[1].str()), std::stod((*it)[2].str())});
    }
    return out;
}

std::size_t count_of(const std::string& s, const std::string& needle)
{
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) {
        ++n;
    }
    return n;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("machine record parsing")
{
    CHECK(parse(kHeader).records.empty());
    CHECK(parse("machine,family,B_tesla,n_limit_per_m3,reference").records.empty());

    const LoadedRecords one = parse(kHeader + "X,tokamak,2.0,8.0e19,ref\n");
    REQUIRE(one.records.size() == 1);
    CHECK(one.records[0].name == "X");
    CHECK(one.records[0].family == MachineFamily::tokamak);
    CHECK(one.records[0].field_B == 2.0);
    CHECK(one.records[0].density_limit_n == 8.0e19);
    CHECK(one.records[0].reference == "ref");
    CHECK(one.warnings.empty());

    const LoadedRecords quoted = parse(kHeader + "\"Y, upgraded\",stellarator,2.5,1e20,\"a \"\"b\"\" c\"\n");
    REQUIRE(quoted.records.size() == 1);
    CHECK(quoted.records[0].name == "Y, upgraded");
    CHECK(quoted.records[0].reference == "a \"b\" c");

    const LoadedRecords unknown = parse(kHeader + "Z,reversed_field_pinch,0.4,2e18,r\n");
    CHECK(unknown.records[0].family == MachineFamily::other);
    REQUIRE(unknown.warnings.size() == 1);
    CHECK(unknown.warnings[0].find("reversed_field_pinch") != std::string::npos);
    CHECK(parse(kHeader + "Z,other,0.4,2e18,r\n").warnings.empty());
}

TEST_CASE("malformed machine rows name their line")
{
    CHECK_THROWS_WITH_AS(parse(kHeader + "A,tokamak,1,1e19,r\nX,tokamak,-1,8e19,ref\n"),
                         doctest::Contains("line 3"), InputError);
    CHECK_THROWS_WITH_AS(parse(kHeader + "X,tokamak,2,0,ref\n"), doctest::Contains("line 2"), InputError);
    CHECK_THROWS_WITH_AS(parse(kHeader + "X,tokamak,abc,1e19,ref\n"), doctest::Contains("line 2"), InputError);
    CHECK_THROWS_WITH_AS(parse(kHeader + "X,tokamak,2,1e19\n"), doctest::Contains("line 2"), InputError);
    CHECK_THROWS_AS(parse("machine,family,B,n,reference\n"), InputError);
    CHECK_THROWS_AS(parse(""), InputError);
    CHECK_THROWS_AS(load_records("/nonexistent/machines.csv"), InputError);
}

TEST_CASE("machine records round trip")
{
    const LoadedRecords sample = load_records(OCP_SAMPLE_DATA_DIR "/sample_machines.csv");
    REQUIRE(sample.records.size() == 10);
    CHECK(sample.warnings.size() == 1);
    std::ostringstream out;
    write_records(out, sample.records);
    CHECK(out.str().rfind(kHeader, 0) == 0);
    const LoadedRecords back = parse(out.str());
    CHECK(back.records == sample.records);
}

TEST_CASE("residuals against the predicted line")
{
    const auto on = parse(kHeader + "A,tokamak,1,1.458e19,r\n").records;
    const std::vector<Residual> r = residuals(on);
    REQUIRE(r.size() == 1);
    CHECK(std::abs(r[0].ratio - 1.0) < 0.001);
    CHECK(r[0].n_predicted == doctest::Approx(oracle_limit(1.0)).epsilon(1e-14));

    const auto above = parse(kHeader + "A,tokamak,1,1.458e20,r\n").records;
    CHECK(std::abs(residuals(above)[0].log10_ratio - 1.0) < 0.001);

    // Synthetic spherical-tokamak rows in the sample data sit about a decade above.
    for (const Residual& s : residuals(load_records(OCP_SAMPLE_DATA_DIR "/sample_machines.csv").records)) {
        if (s.record.family == MachineFamily::spherical_tokamak) {
            CHECK(std::abs(s.log10_ratio - 1.0) < 0.01);
        }
    }

    std::ostringstream csv;
    write_residuals_csv(csv, r);
    CHECK(csv.str().rfind("machine,family,B_tesla,n_observed,n_predicted,ratio,log10_ratio\n", 0) == 0);
}

TEST_CASE("residuals do not depend on record order")
{
    auto recs = load_records(OCP_SAMPLE_DATA_DIR "/sample_machines.csv").records;
    const std::vector<Residual> base = residuals(recs);
    std::mt19937_64 rng(8);
    std::shuffle(recs.begin(), recs.end(), rng);
    const std::vector<Residual> shuffled = residuals(recs);
    for (const Residual& a : base) {
        const auto it = std::find_if(shuffled.begin(), shuffled.end(),
                                     [&](const Residual& b) { return b.record == a.record; });
        REQUIRE(it != shuffled.end());
        CHECK(it->ratio == a.ratio);
    }
}

TEST_CASE("figure geometry")
{
    const auto on_line = load_records(OCP_TEST_DATA_DIR "/on_line_records.csv").records;
    const std::string svg = render_figure(on_line, 0.1, 10.0);

    std::size_t polylines = 0;
    const std::vector<Point> line = polyline_points(svg, polylines);
    CHECK(polylines == 1);
    REQUIRE(line.size() == 2);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find(">B [T]<") != std::string::npos);
    CHECK(svg.find(">n [m⁻³]<") != std::string::npos);

    // Oracle transform: 1000 px width, margins 110 / 30, equal pixels per decade. The B
    // range spans two decades; the densities 1.458e17 .. 1.458e21 need decades 17 .. 22.
    const double per_decade = (1000.0 - 110.0 - 30.0) / 2.0;
    const auto px = [&](double b) { return 110.0 + (std::log10(b) + 1.0) * per_decade; };
    const auto py = [&](double n) { return 30.0 + (22.0 - std::log10(n)) * per_decade; };
    CHECK(line[0].x == doctest::Approx(px(0.1)).epsilon(1e-6));
    CHECK(line[0].y == doctest::Approx(py(oracle_limit(0.1))).epsilon(1e-6));
    CHECK(line[1].x == doctest::Approx(px(10.0)).epsilon(1e-6));
    CHECK(line[1].y == doctest::Approx(py(oracle_limit(10.0))).epsilon(1e-6));
    CHECK(std::abs(oracle_limit(0.1) / 1.458e17 - 1.0) < 1e-3);
    CHECK(std::abs(oracle_limit(10.0) / 1.458e21 - 1.0) < 1e-3);
    // Slope 2 on screen.
    CHECK((line[0].y - line[1].y) / (line[1].x - line[0].x) == doctest::Approx(2.0).epsilon(1e-6));

    const std::vector<Point> markers = circle_centres(svg);
    REQUIRE(markers.size() == 2);
    for (const Point& m : markers) {
        const double dx = line[1].x - line[0].x;
        const double dy = line[1].y - line[0].y;
        const double dist = std::abs(dy * (m.x - line[0].x) - dx * (m.y - line[0].y)) / std::hypot(dx, dy);
        CHECK(dist < 1.0);
    }

    const std::string empty = render_figure({}, 0.1, 10.0);
    std::size_t empty_lines = 0;
    polyline_points(empty, empty_lines);
    CHECK(empty_lines == 1);
    CHECK(count_of(empty, "class=\"marker ") == 0);

    const auto sample = load_records(OCP_SAMPLE_DATA_DIR "/sample_machines.csv").records;
    const std::string all = render_figure(sample, 0.1, 10.0);
    CHECK(count_of(all, "class=\"marker tokamak\"") == 4);
    CHECK(count_of(all, "class=\"marker stellarator\"") == 3);
    CHECK(count_of(all, "class=\"marker spherical_tokamak\"") == 2);
    CHECK(count_of(all, "class=\"marker other\"") == 1);

    CHECK_THROWS_AS(render_figure({}, 10.0, 0.1), DomainError);
}

TEST_CASE("figure matches the golden file")
{
    const auto on_line = load_records(OCP_TEST_DATA_DIR "/on_line_records.csv").records;
    CHECK(render_figure(on_line, 0.1, 10.0) == read_file(OCP_TEST_DATA_DIR "/golden_figure.svg"));
}
