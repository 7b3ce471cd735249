#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ctrw::cli {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 2718281828ULL;

enum class Command { Density, InverseDensity, KernelP, KernelQ, Joint2, JointXyvr, Simulate, Verify };
enum class OutputFormat { Csv, Json };
enum class SimulationKind { Limit, Ctrw };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

// One grid axis "name:min:max:points". Abscissas are min + i (max-min)/points
// for i < points; where a command bins (joint2) the same spec gives `points`
// cells with edges min + i (max-min)/points, i <= points.
struct GridAxis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    std::size_t points = 2;

    std::vector<double> abscissas() const;
    std::vector<double> edges() const;
    std::string to_string() const;
    static GridAxis parse(const std::string& spec);
};

struct RunConfig {
    Command command = Command::Density;
    std::string model = "example1";
    double beta = 0.5;
    double chi = 0.0;
    double tau = 0.0;
    std::vector<double> times;
    std::vector<GridAxis> grid;
    double tol_rel = 1e-5;
    double tol_abs = 1e-10;
    std::uint64_t seed = kDefaultSeed;
    std::size_t paths = 10000;
    /// Start state of kernel-p (x, v) and kernel-q (x as y, v as r).
    double from_x = 0.0;
    double from_v = 0.0;
    SimulationKind sim_kind = SimulationKind::Limit;
    /// Waiting law of the discrete walk: "exact-stable" or "pareto".
    std::string sim_waiting = "exact-stable";
    double sim_du = 1e-3;
    double sim_c = 1e3;
    int workers = 1;
    bool quick = false;
    std::string output_path;
    OutputFormat format = OutputFormat::Csv;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Flat key-value form; loading it back gives the same config.
    nlohmann::ordered_json to_json() const;
    const GridAxis* axis(const std::string& name) const;
};

/// Every key load_config accepts.
const std::vector<std::string>& config_keys();

/// Defaults, then the flat JSON object in `file` (if any), then `overrides`.
/// Unknown keys and invariant violations throw ConfigError.
RunConfig load_config(const std::optional<std::string>& file, const nlohmann::json& overrides);
RunConfig config_from_json(const nlohmann::json& flat);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    /// Written in order as "# key: value" lines (CSV) or the "meta" object.
    std::vector<std::pair<std::string, std::string>> meta;

    const std::string* find_meta(const std::string& key) const;
};

/// CSV: per table, '#' metadata lines, a header row and rows at 17
/// significant digits; tables are separated by a blank line. JSON: one
/// {meta, columns, rows} object, or an array of them for several tables.
void write_tables(std::ostream& out, const std::vector<Table>& tables, OutputFormat format);
std::string format_tables(const std::vector<Table>& tables, OutputFormat format);
std::vector<Table> read_tables(std::istream& in, OutputFormat format);

/// Config echoed into a table's metadata.
RunConfig config_from_table(const Table& table);

/// Shared metadata block: version, seed, config echo.
std::vector<std::pair<std::string, std::string>> standard_meta(const RunConfig& cfg);

struct RunResult {
    std::vector<Table> tables;
    /// 0 success, 3 verification failure.
    int exit_code = 0;
    /// Human-readable lines for stderr (verify report).
    std::vector<std::string> report;
};

/// Executes one command. Library errors propagate.
RunResult run(const RunConfig& cfg);

/// Exit status for an exception escaping run(): 1 validation, 2 numerical.
int exit_code_for(const std::exception& e);

/// Decimal form with 17 significant digits; strtod reads it back exactly.
std::string format_double(double v);

} // namespace ctrw::cli
