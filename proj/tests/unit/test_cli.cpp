#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "ctrw/cli.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/parallel.hpp"
#include "ctrw/rng.hpp"

using namespace ctrw;
using namespace ctrw::cli;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nlohmann::json;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = "ctrw_cli_test_" + name;
    std::ofstream(path) << text;
    return path;
}

std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("empty config file plus flags takes the documented defaults") {
    const auto path = write_temp("empty.json", "{}");
    const auto cfg = load_config(path, json{{"command", "density"}, {"times", "1"}, {"grid", "t:0:10:200"}});
    CHECK(cfg.tol_rel == 1e-5);
    CHECK(cfg.format == OutputFormat::Csv);
    CHECK(cfg.seed == kDefaultSeed);
    CHECK(cfg.times == std::vector<double>{1.0});
    std::remove(path.c_str());
}

TEST_CASE("flags override file values") {
    const auto path = write_temp("file.json", R"({"beta": 0.3, "tol.rel": 1e-7, "times": [1, 2]})");
    const auto cfg = load_config(path, json{{"beta", 0.6}});
    CHECK(cfg.beta == 0.6);
    CHECK(cfg.tol_rel == 1e-7);
    CHECK(cfg.times == std::vector<double>{1.0, 2.0});
    std::remove(path.c_str());
}

TEST_CASE("configuration errors name the field") {
    CHECK_THAT(error_message([] { config_from_json(json{{"times", json::array({2, 1})}}); }),
               ContainsSubstring("times must be strictly increasing"));
    const auto unknown = error_message([] { config_from_json(json{{"betta", 0.5}}); });
    CHECK_THAT(unknown, ContainsSubstring("unknown key 'betta'"));
    CHECK_THAT(unknown, ContainsSubstring("tol.rel"));
    CHECK_THAT(error_message([] { config_from_json(json{{"grid", "x:0:1:1"}}); }), ContainsSubstring("grid"));
    CHECK_THAT(error_message([] { config_from_json(json{{"paths", 0}}); }), ContainsSubstring("paths"));
    CHECK_THAT(error_message([] { config_from_json(json{{"beta", 1.0}}); }), ContainsSubstring("beta"));
    CHECK_THAT(error_message([] { config_from_json(json{{"beta", "half"}}); }), ContainsSubstring("beta"));
    CHECK_THAT(error_message([] { config_from_json(json{{"grid", "x:0:1"}}); }), ContainsSubstring("name:min:max"));
    CHECK_THROWS_AS(load_config(std::string("no_such_file.json"), json::object()), ConfigError);
}

TEST_CASE("effective config round-trips") {
    RunConfig c;
    c.command = Command::Joint2;
    c.beta = 0.37;
    c.times = {0.1, 1.0 / 3.0};
    c.grid = {GridAxis::parse("x:0:4:20"), GridAxis::parse("y:0.1:5:7")};
    c.seed = 18446744073709551615ULL;
    c.sim_kind = SimulationKind::Ctrw;
    c.format = OutputFormat::Json;
    const auto j = c.to_json();
    const auto back = config_from_json(json::parse(j.dump()));
    CHECK(back.to_json() == j);
    CHECK(back.times == c.times);
    CHECK(back.seed == c.seed);
}

TEST_CASE("grid axis abscissas") {
    const auto a = GridAxis::parse("t:0:10:200");
    const auto x = a.abscissas();
    REQUIRE(x.size() == 200);
    CHECK(x.front() == 0.0);
    CHECK(x[20] == 1.0);
    CHECK_THAT(x.back(), WithinAbs(9.95, 1e-12));
    CHECK(a.edges().size() == 201);
    CHECK(a.edges().back() == 10.0);
}

TEST_CASE("tables round-trip bit-exactly") {
    RngStream rng(3, 0);
    Table t{"numbers", {"a", "b", "c"}, {}, {{"seed", "3"}, {"note", "x: y"}}};
    for (int i = 0; i < 200; ++i)
        t.rows.push_back({rng.uniform() * std::pow(10.0, i % 40 - 20), -rng.exponential(), 1.0 / (i + 1.0)});
    t.rows.push_back({0.0, -0.0, 5e-324});
    Table e{"empty", {"x"}, {}, {{"seed", "3"}}};
    for (auto fmt : {OutputFormat::Csv, OutputFormat::Json}) {
        std::istringstream in(format_tables({t, e}, fmt));
        const auto back = read_tables(in, fmt);
        REQUIRE(back.size() == 2);
        CHECK(back[0].name == "numbers");
        CHECK(back[0].columns == t.columns);
        CHECK(back[0].meta == t.meta);
        CHECK(back[0].rows == t.rows);
        CHECK(back[1].rows.empty());
        CHECK(back[1].columns == e.columns);
    }
}

TEST_CASE("empty table is metadata and header only") {
    RunConfig c;
    Table t{"empty", {"x", "y"}, {}, standard_meta(c)};
    const auto text = format_tables({t}, OutputFormat::Csv);
    std::istringstream in(text);
    std::string line, last;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        last = line;
    }
    CHECK(last == "x,y");
    CHECK(lines == 1 + static_cast<int>(t.meta.size()) + 1);
    CHECK(t.find_meta("seed") != nullptr);
    CHECK(*t.find_meta("version") == kToolVersion);
}

TEST_CASE("density command reproduces the closed form at beta = 1/2") {
    const auto cfg = config_from_json(json{{"command", "density"}, {"beta", 0.5}, {"times", "1"}, {"grid", "t:0:10:200"}});
    const auto r = run(cfg);
    REQUIRE(r.tables.size() == 1);
    const auto& t = r.tables[0];
    REQUIRE(t.rows.size() == 200);
    CHECK(t.rows[20][0] == 1.0);
    CHECK_THAT(t.rows[20][1], WithinRel(std::exp(-0.25) / (2.0 * std::sqrt(std::numbers::pi)), 1e-10));
    // The file describes its own run.
    CHECK(config_from_table(t).to_json() == cfg.to_json());
}

TEST_CASE("joint2 output carries unit mass") {
    const auto cfg = config_from_json(
        json{{"command", "joint2"}, {"beta", 0.5}, {"times", "1,2"}, {"grid", {"x:0:10:8", "y:0:12:8"}}});
    const auto r = run(cfg);
    REQUIRE(r.tables.size() == 2);
    double mass = 0.0;
    for (const auto& row : r.tables[0].rows) mass += row[3];
    for (const auto& row : r.tables[1].rows) mass += row[5];
    CHECK_THAT(mass, WithinAbs(1.0, 1e-3));
    CHECK_THAT(std::stod(*r.tables[0].find_meta("diagonal_atom")), WithinAbs(0.5, 1e-8));
}

TEST_CASE("Example2 P kernel table lies on the coupling line") {
    const auto cfg = config_from_json(json{{"command", "kernel-p"},
                                           {"model", "example2"},
                                           {"beta", 0.6},
                                           {"times", "1.5"},
                                           {"from.x", 0.25},
                                           {"from.v", 0.5},
                                           {"grid", "v:0:1.5:30"}});
    const auto r = run(cfg);
    REQUIRE(r.tables.size() == 2);
    CHECK(r.tables[0].rows.size() == 1);
    for (const auto& row : r.tables[1].rows) CHECK_THAT(row[0] + row[1], WithinAbs(0.25 + 0.5 + 1.5, 1e-12));
    CHECK_THAT(std::stod(*r.tables[1].find_meta("total_mass")), WithinAbs(1.0, 1e-4));
}

TEST_CASE("kernel grid must name the free axes") {
    const auto cfg = config_from_json(json{{"command", "kernel-p"}, {"times", "1"}, {"grid", "q:0:1:4"}});
    CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("exit codes by error kind") {
    CHECK(exit_code_for(ConfigError("cli", "x")) == 1);
    CHECK(exit_code_for(ParameterError("stable", "x")) == 1);
    CHECK(exit_code_for(IntegrationError("quadrature", "x", 0.0, 1.0)) == 2);
    CHECK(exit_code_for(HorizonError("mc", "x")) == 2);
}

TEST_CASE("environment overrides the worker count") {
    ::setenv("CTRW_FDD_WORKERS", "3", 1);
    CHECK(resolve_workers(1) == 3);
    ::setenv("CTRW_FDD_WORKERS", "zero", 1);
    CHECK_THROWS_AS(resolve_workers(1), ConfigError);
    ::unsetenv("CTRW_FDD_WORKERS");
    CHECK(resolve_workers(2) == 2);
}
