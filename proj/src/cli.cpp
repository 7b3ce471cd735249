#include "ctrw/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ctrw/errors.hpp"
#include "ctrw/fdd.hpp"
#include "ctrw/mc.hpp"
#include "ctrw/models.hpp"
#include "ctrw/parallel.hpp"
#include "ctrw/stable.hpp"
#include "ctrw/verify.hpp"

namespace ctrw::cli {

namespace {

constexpr const char* kModule = "cli";
using nlohmann::json;

const std::vector<std::pair<Command, std::string>>& command_names() {
    static const std::vector<std::pair<Command, std::string>> names{
        {Command::Density, "density"},     {Command::InverseDensity, "inverse-density"},
        {Command::KernelP, "kernel-p"},    {Command::KernelQ, "kernel-q"},
        {Command::Joint2, "joint2"},       {Command::JointXyvr, "joint-xyvr"},
        {Command::Simulate, "simulate"},   {Command::Verify, "verify"}};
    return names;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_number(const std::string& text, const std::string& field) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size())
        throw ConfigError(kModule, field + ": '" + text + "' is not a number");
    return v;
}

std::vector<double> parse_times(const json& v) {
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& e : v) out.push_back(e.get<double>());
    } else if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_string()) {
        for (const auto& part : split(v.get<std::string>(), ',')) out.push_back(parse_number(part, "times"));
    } else {
        throw ConfigError(kModule, "times: expected a number, a list or a comma-separated string");
    }
    return out;
}

std::vector<GridAxis> parse_grid(const json& v) {
    std::vector<GridAxis> out;
    if (v.is_string()) {
        out.push_back(GridAxis::parse(v.get<std::string>()));
    } else if (v.is_array()) {
        for (const auto& e : v) out.push_back(GridAxis::parse(e.get<std::string>()));
    } else {
        throw ConfigError(kModule, "grid: expected 'name:min:max:points' or a list of them");
    }
    return out;
}

bool parse_bool(const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
    }
    throw ConfigError(kModule, "quick: expected true or false");
}

std::string model_summary(const KernelDensity& k) { return k.support; }

// Cartesian product of the axis abscissas, outermost axis first.
template <class F>
void for_each_grid_point(const std::vector<std::vector<double>>& axes, F&& f) {
    const std::size_t n = axes.size();
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> point(n);
    if (n == 0) return;
    for (;;) {
        for (std::size_t k = 0; k < n; ++k) point[k] = axes[k][idx[k]];
        f(point);
        std::size_t k = n;
        while (k > 0) {
            --k;
            if (++idx[k] < axes[k].size()) break;
            idx[k] = 0;
            if (k == 0) return;
        }
    }
}

std::string number_meta(double v) { return format_double(v); }

void require_times(const RunConfig& cfg, std::size_t count, const char* what) {
    if (count == 0 ? cfg.times.empty() : cfg.times.size() != count)
        throw ConfigError(kModule, std::string(to_string(cfg.command)) + " needs " + what);
}

const GridAxis& require_axis(const RunConfig& cfg, const std::string& name) {
    if (const auto* a = cfg.axis(name)) return *a;
    throw ConfigError(kModule, to_string(cfg.command) + " needs a grid axis named '" + name + "'");
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ----- commands -----

RunResult run_density(const RunConfig& cfg, bool inverse) {
    require_times(cfg, 0, inverse ? "times (clock times t)" : "times (operational times u)");
    if (cfg.grid.size() != 1) throw ConfigError(kModule, "grid: exactly one axis expected");
    const GridAxis& axis = cfg.grid.front();
    const StableParams params(cfg.beta);
    const auto dist = StableDistribution::get(cfg.beta);

    Table t;
    t.name = inverse ? "inverse_density" : "density";
    t.meta = standard_meta(cfg);
    t.columns.push_back(axis.name);
    for (double s : cfg.times) {
        if (!(s > 0.0)) throw ConfigError(kModule, "times must be positive");
        t.columns.push_back(inverse ? "h(" + axis.name + ";t=" + short_number(s) + ")"
                                    : "g(" + axis.name + ";u=" + short_number(s) + ")");
        // Probability outside [min, max] of the tabulated law.
        const double inside = inverse ? dist->inverse_cdf(s, axis.max) - dist->inverse_cdf(s, std::max(axis.min, 0.0))
                                      : dist->cdf(axis.max, s) - dist->cdf(std::max(axis.min, 0.0), s);
        t.meta.emplace_back("mass_outside_grid[" + short_number(s) + "]", number_meta(std::max(0.0, 1.0 - inside)));
    }
    for (double a : axis.abscissas()) {
        std::vector<double> row{a};
        for (double s : cfg.times)
            row.push_back(inverse ? (a > 0.0 ? inverse_stable_pdf(params, s, a) : 0.0) : stable_pdf(params, a, s));
        t.rows.push_back(std::move(row));
    }
    return {{t}, 0, {}};
}

RunResult run_kernel(const RunConfig& cfg) {
    const ModelSpec model = ModelSpec::from_name(cfg.model, cfg.beta);
    require_times(cfg, 1, "exactly one time");
    const double t = cfg.times.front();
    KernelDensity k;
    if (cfg.command == Command::KernelP) {
        k = p_kernel(model, t, StateXV{cfg.from_x, cfg.from_v});
    } else if (cfg.command == Command::KernelQ) {
        k = q_kernel(model, t, StateYR{cfg.from_x, cfg.from_v});
    } else {
        k = joint_xyvr(model, cfg.chi, cfg.tau, t);
    }

    std::vector<std::vector<double>> axes;
    for (const auto& name : k.axis_names) axes.push_back(require_axis(cfg, name).abscissas());
    for (const auto& g : cfg.grid)
        if (std::find(k.axis_names.begin(), k.axis_names.end(), g.name) == k.axis_names.end())
            throw ConfigError(kModule, "grid axis '" + g.name + "' is not a free axis of this kernel (axes: " +
                                           join(k.axis_names, ", ") + ")");

    const MassReport mass = total_mass(k, std::max(cfg.tol_rel, 1e-9));
    auto meta = standard_meta(cfg);
    meta.emplace_back("support", model_summary(k));
    meta.emplace_back("free_axes", join(k.axis_names, ","));
    meta.emplace_back("total_mass", number_meta(mass.total));
    meta.emplace_back("atom_mass", number_meta(mass.atom_mass));
    meta.emplace_back("continuous_mass", number_meta(mass.continuous_mass));
    meta.emplace_back("mass_error_estimate", number_meta(mass.error_estimate));

    Table atoms{"atoms", k.coordinates, {}, meta};
    atoms.columns.push_back("weight");
    for (const auto& a : k.atoms) {
        auto row = a.location;
        row.push_back(a.weight);
        atoms.rows.push_back(std::move(row));
    }

    Table dens{"density", k.coordinates, {}, meta};
    dens.columns.push_back("density");
    // Rectangle-rule mass of the grid, a check on how much of the continuous
    // part the grid covers.
    double cell = 1.0;
    for (const auto& name : k.axis_names) {
        const GridAxis& a = *cfg.axis(name);
        cell *= (a.max - a.min) / static_cast<double>(a.points);
    }
    double riemann = 0.0;
    for_each_grid_point(axes, [&](const std::vector<double>& free) {
        auto row = k.embed_point(free);
        const double d = k.density_free(free);
        riemann += d * cell;
        row.push_back(d);
        dens.rows.push_back(std::move(row));
    });
    if (k.has_density()) dens.meta.emplace_back("grid_riemann_mass", number_meta(riemann));
    return {{atoms, dens}, 0, {}};
}

RunResult run_joint2(const RunConfig& cfg) {
    require_times(cfg, 2, "exactly two times t1 < t2");
    const GridAxis& ax = require_axis(cfg, "x");
    const GridAxis& ay = require_axis(cfg, "y");
    TwoTimeOptions opt;
    opt.rel_tol = cfg.tol_rel;
    opt.workers = resolve_workers(cfg.workers);
    const JointGrid g =
        joint_inverse_two_times(StableParams(cfg.beta), cfg.times[0], cfg.times[1], ax.edges(), ay.edges(), opt);

    auto meta = standard_meta(cfg);
    meta.emplace_back("diagonal_atom", number_meta(g.diagonal_atom));
    meta.emplace_back("offdiagonal_mass", number_meta(g.offdiagonal_mass));
    meta.emplace_back("diagonal_outside", number_meta(g.diagonal_outside));
    meta.emplace_back("grid_mass", number_meta(g.grid_mass()));
    meta.emplace_back("summed_mass", number_meta(g.grid_mass() + g.diagonal_outside));
    meta.emplace_back("flagged_cells", std::to_string(g.flagged.size()));

    Table diag{"diagonal", {"x_lo", "x_hi", "diagonal_density", "mass"}, {}, meta};
    for (std::size_t i = 0; i < g.nx(); ++i)
        diag.rows.push_back({g.x_edges[i], g.x_edges[i + 1], g.diagonal_density[i], g.diagonal_cell_mass(i)});
    Table cells{"offdiagonal", {"x_lo", "x_hi", "y_lo", "y_hi", "density", "mass"}, {}, meta};
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j)
            cells.rows.push_back(
                {g.x_edges[i], g.x_edges[i + 1], g.y_edges[j], g.y_edges[j + 1], g.value(i, j), g.cell_mass(i, j)});
    return {{diag, cells}, 0, {}};
}

RunResult run_simulate(const RunConfig& cfg) {
    require_times(cfg, 0, "times");
    const ModelSpec model = ModelSpec::from_name(cfg.model, cfg.beta);
    const int workers = resolve_workers(cfg.workers);
    Table t;
    t.meta = standard_meta(cfg);
    if (cfg.sim_kind == SimulationKind::Limit) {
        RenewalOptions opt;
        opt.n_paths = cfg.paths;
        opt.du = cfg.sim_du;
        opt.seed = cfg.seed;
        opt.workers = workers;
        opt.chi = cfg.chi;
        opt.tau = cfg.tau;
        const auto s = simulate_renewals(model, cfg.times, opt);
        t.name = "renewal_readouts";
        t.columns = {"path", "t", "E", "E_coarse", "G", "H", "X", "Y"};
        for (std::size_t p = 0; p < cfg.paths; ++p)
            for (std::size_t j = 0; j < s.times.size(); ++j)
                t.rows.push_back({static_cast<double>(p), s.times[j], s.e[j][p], s.e_coarse[j][p], s.g[j][p],
                                  s.h[j][p], s.x[j][p], s.y[j][p]});
    } else {
        CtrwConfig c;
        c.c = cfg.sim_c;
        c.waiting_law = cfg.sim_waiting == "pareto" ? WaitingLaw::ParetoTail : WaitingLaw::ExactStable;
        c.horizon = cfg.times.back();
        const auto s = simulate_ctrw(model, c, cfg.times, cfg.seed, cfg.paths, workers);
        t.name = "ctrw";
        t.columns = {"path", "t", "X", "Y"};
        for (std::size_t p = 0; p < cfg.paths; ++p)
            for (std::size_t j = 0; j < s.times.size(); ++j)
                t.rows.push_back({static_cast<double>(p), s.times[j], s.x[j][p], s.y[j][p]});
    }
    return {{t}, 0, {}};
}

RunResult run_verify(const RunConfig& cfg) {
    verify::VerifyOptions opt;
    opt.quick = cfg.quick;
    opt.seed = cfg.seed;
    opt.workers = resolve_workers(cfg.workers);
    RunResult out;
    const auto outcomes = verify::run_acceptance(opt);
    bool all = true;
    Table summary{"verify_summary", {"check", "passed"}, {}, standard_meta(cfg)};
    for (const auto& o : outcomes) {
        all = all && o.passed;
        out.report.push_back(verify::report_line(o));
        // Deterministic part only: the tolerance verdict, not the timing.
        summary.rows.push_back({static_cast<double>(o.id), o.within_tolerance ? 1.0 : 0.0});
        for (auto t : o.tables) {
            t.meta.insert(t.meta.begin(), {"check", std::to_string(o.id) + " " + o.name});
            t.meta.emplace_back("summary", o.summary);
            out.tables.push_back(std::move(t));
        }
    }
    out.tables.insert(out.tables.begin(), summary);
    out.exit_code = all ? 0 : 3;
    return out;
}

} // namespace

// ----- names and grid axes -----

std::string to_string(Command c) {
    for (const auto& [cmd, name] : command_names())
        if (cmd == c) return name;
    return "unknown";
}

Command command_from_string(const std::string& s) {
    std::vector<std::string> valid;
    for (const auto& [cmd, name] : command_names()) {
        if (name == s) return cmd;
        valid.push_back(name);
    }
    throw ConfigError(kModule, "unknown command '" + s + "' (valid: " + join(valid, ", ") + ")");
}

std::vector<double> GridAxis::abscissas() const {
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = min + static_cast<double>(i) * (max - min) / static_cast<double>(points);
    return out;
}

std::vector<double> GridAxis::edges() const { return uniform_edges(min, max, points); }

std::string GridAxis::to_string() const {
    return name + ":" + format_double(min) + ":" + format_double(max) + ":" + std::to_string(points);
}

GridAxis GridAxis::parse(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.size() != 4 || parts[0].empty())
        throw ConfigError(kModule, "grid: '" + spec + "' is not of the form name:min:max:points");
    GridAxis a;
    a.name = parts[0];
    a.min = parse_number(parts[1], "grid " + a.name + " min");
    a.max = parse_number(parts[2], "grid " + a.name + " max");
    const double n = parse_number(parts[3], "grid " + a.name + " points");
    if (!(n >= 0.0) || n != std::floor(n)) throw ConfigError(kModule, "grid " + a.name + ": points must be an integer");
    a.points = static_cast<std::size_t>(n);
    return a;
}

// ----- configuration -----

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "command", "model",  "beta",         "chi",         "tau",      "times",    "grid",
        "tol.rel", "tol.abs", "seed",        "paths",       "from.x",   "from.v",   "sim.kind",
        "sim.waiting", "sim.du", "sim.c",    "workers",     "quick",    "output.path", "output.format"};
    return keys;
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& field, const std::string& what) {
        throw ConfigError(kModule, field + ": " + what);
    };
    if (model != "example1" && model != "example2" && model != "pure-drift")
        fail("model", "must be example1, example2 or pure-drift");
    if (!(beta > 0.0 && beta < 1.0)) fail("beta", "must lie in (0, 1)");
    if (!std::isfinite(chi)) fail("chi", "must be finite");
    if (!std::isfinite(tau)) fail("tau", "must be finite");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) fail("times", "must be finite");
        if (i > 0 && !(times[i] > times[i - 1])) fail("times", "times must be strictly increasing");
    }
    for (const auto& a : grid) {
        if (a.points < 2) fail("grid", "axis " + a.name + ": grid points must be at least 2");
        if (!(a.max > a.min) || !std::isfinite(a.min) || !std::isfinite(a.max))
            fail("grid", "axis " + a.name + ": needs finite min < max");
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (grid[i].name == grid[j].name) fail("grid", "axis " + grid[i].name + " given twice");
    if (!(tol_rel > 0.0)) fail("tol.rel", "must be positive");
    if (!(tol_abs >= 0.0)) fail("tol.abs", "must be non-negative");
    if (paths < 1) fail("paths", "must be at least 1");
    if (!(from_v >= 0.0)) fail("from.v", "must be non-negative");
    if (!std::isfinite(from_x)) fail("from.x", "must be finite");
    if (sim_waiting != "exact-stable" && sim_waiting != "pareto") fail("sim.waiting", "must be exact-stable or pareto");
    if (!(sim_du > 0.0)) fail("sim.du", "must be positive");
    if (!(sim_c > 0.0) || !std::isfinite(sim_c)) fail("sim.c", "must be positive");
    if (workers < 1) fail("workers", "must be at least 1");
}

const GridAxis* RunConfig::axis(const std::string& name) const {
    for (const auto& a : grid)
        if (a.name == name) return &a;
    return nullptr;
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = cli::to_string(command);
    j["model"] = model;
    j["beta"] = beta;
    j["chi"] = chi;
    j["tau"] = tau;
    j["times"] = times;
    std::vector<std::string> g;
    for (const auto& a : grid) g.push_back(a.to_string());
    j["grid"] = g;
    j["tol.rel"] = tol_rel;
    j["tol.abs"] = tol_abs;
    j["seed"] = seed;
    j["paths"] = paths;
    j["from.x"] = from_x;
    j["from.v"] = from_v;
    j["sim.kind"] = sim_kind == SimulationKind::Limit ? "limit" : "ctrw";
    j["sim.waiting"] = sim_waiting;
    j["sim.du"] = sim_du;
    j["sim.c"] = sim_c;
    j["workers"] = workers;
    j["quick"] = quick;
    j["output.path"] = output_path;
    j["output.format"] = format == OutputFormat::Csv ? "csv" : "json";
    return j;
}

RunConfig config_from_json(const json& flat) {
    if (!flat.is_object()) throw ConfigError(kModule, "configuration must be a JSON object of key-value pairs");
    const auto& keys = config_keys();
    RunConfig c;
    for (const auto& [key, value] : flat.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError(kModule, "unknown key '" + key + "'; valid keys: " + join(keys, ", "));
        try {
            if (key == "command") c.command = command_from_string(value.get<std::string>());
            else if (key == "model") c.model = value.get<std::string>();
            else if (key == "beta") c.beta = value.get<double>();
            else if (key == "chi") c.chi = value.get<double>();
            else if (key == "tau") c.tau = value.get<double>();
            else if (key == "times") c.times = parse_times(value);
            else if (key == "grid") c.grid = parse_grid(value);
            else if (key == "tol.rel") c.tol_rel = value.get<double>();
            else if (key == "tol.abs") c.tol_abs = value.get<double>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "paths") {
                if (!value.is_number_unsigned()) throw ConfigError(kModule, "paths: must be a positive integer");
                c.paths = value.get<std::size_t>();
            } else if (key == "from.x") c.from_x = value.get<double>();
            else if (key == "from.v") c.from_v = value.get<double>();
            else if (key == "sim.kind") {
                const auto s = value.get<std::string>();
                if (s == "limit") c.sim_kind = SimulationKind::Limit;
                else if (s == "ctrw") c.sim_kind = SimulationKind::Ctrw;
                else throw ConfigError(kModule, "sim.kind: must be limit or ctrw");
            } else if (key == "sim.waiting") c.sim_waiting = value.get<std::string>();
            else if (key == "sim.du") c.sim_du = value.get<double>();
            else if (key == "sim.c") c.sim_c = value.get<double>();
            else if (key == "workers") c.workers = value.get<int>();
            else if (key == "quick") c.quick = parse_bool(value);
            else if (key == "output.path") c.output_path = value.get<std::string>();
            else if (key == "output.format") {
                const auto s = value.get<std::string>();
                if (s == "csv") c.format = OutputFormat::Csv;
                else if (s == "json") c.format = OutputFormat::Json;
                else throw ConfigError(kModule, "output.format: must be csv or json");
            }
        } catch (const json::exception& e) {
            throw ConfigError(kModule, key + ": wrong value type (" + value.dump() + ")");
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::optional<std::string>& file, const json& overrides) {
    json merged = json::object();
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError(kModule, "cannot open config file '" + *file + "'");
        try {
            merged = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(kModule, "config file '" + *file + "' is not valid JSON: " + e.what());
        }
        if (!merged.is_object()) throw ConfigError(kModule, "config file must hold a JSON object");
    }
    if (!overrides.is_null()) {
        if (!overrides.is_object()) throw ConfigError(kModule, "overrides must be a JSON object");
        for (const auto& [k, v] : overrides.items()) merged[k] = v;
    }
    return config_from_json(merged);
}

// ----- tables -----

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::string* Table::find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return &v;
    return nullptr;
}

std::vector<std::pair<std::string, std::string>> standard_meta(const RunConfig& cfg) {
    return {{"tool", "ctrw-fdd"},
            {"version", kToolVersion},
            {"seed", std::to_string(cfg.seed)},
            {"config", cfg.to_json().dump()}};
}

void write_tables(std::ostream& out, const std::vector<Table>& tables, OutputFormat format) {
    if (format == OutputFormat::Csv) {
        for (std::size_t n = 0; n < tables.size(); ++n) {
            const Table& t = tables[n];
            if (n > 0) out << '\n';
            out << "# table: " << t.name << '\n';
            for (const auto& [k, v] : t.meta) out << "# " << k << ": " << v << '\n';
            out << join(t.columns, ",") << '\n';
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
                out << '\n';
            }
        }
    } else {
        nlohmann::ordered_json all = nlohmann::ordered_json::array();
        for (const auto& t : tables) {
            nlohmann::ordered_json j;
            nlohmann::ordered_json meta;
            meta["table"] = t.name;
            for (const auto& [k, v] : t.meta) meta[k] = v;
            j["meta"] = meta;
            j["columns"] = t.columns;
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const auto& r : t.rows) {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                // Non-finite values have no JSON number form; keep them as text.
                for (double v : r) row.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_double(v)));
                rows.push_back(row);
            }
            j["rows"] = rows;
            all.push_back(j);
        }
        out << (all.size() == 1 ? all[0] : all).dump(1) << '\n';
    }
    if (!out) throw std::runtime_error("write failed");
}

std::string format_tables(const std::vector<Table>& tables, OutputFormat format) {
    std::ostringstream s;
    write_tables(s, tables, format);
    return s.str();
}

std::vector<Table> read_tables(std::istream& in, OutputFormat format) {
    std::vector<Table> out;
    if (format == OutputFormat::Json) {
        // Ordered parse keeps the metadata in file order.
        const auto doc = nlohmann::ordered_json::parse(in);
        const auto read_one = [](const nlohmann::ordered_json& j) {
            Table t;
            for (const auto& [k, v] : j.at("meta").items()) {
                if (k == "table") t.name = v.get<std::string>();
                else t.meta.emplace_back(k, v.get<std::string>());
            }
            t.columns = j.at("columns").get<std::vector<std::string>>();
            for (const auto& r : j.at("rows")) {
                std::vector<double> row;
                for (const auto& v : r) row.push_back(v.is_string() ? std::strtod(v.get<std::string>().c_str(), nullptr)
                                                                    : v.get<double>());
                t.rows.push_back(std::move(row));
            }
            return t;
        };
        if (doc.is_array()) {
            for (const auto& j : doc) out.push_back(read_one(j));
        } else {
            out.push_back(read_one(doc));
        }
        return out;
    }

    std::string line;
    Table* cur = nullptr;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            cur = nullptr;
            continue;
        }
        if (line[0] == '#') {
            const auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            const auto colon = body.find(": ");
            const std::string key = body.substr(0, colon);
            const std::string value = colon == std::string::npos ? std::string() : body.substr(colon + 2);
            if (key == "table" || cur == nullptr) {
                out.emplace_back();
                cur = &out.back();
                header_done = false;
            }
            if (key == "table") cur->name = value;
            else cur->meta.emplace_back(key, value);
            continue;
        }
        if (cur == nullptr) {
            out.emplace_back();
            cur = &out.back();
            header_done = false;
        }
        if (!header_done) {
            cur->columns = split(line, ',');
            header_done = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& cell : split(line, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        cur->rows.push_back(std::move(row));
    }
    return out;
}

RunConfig config_from_table(const Table& table) {
    const std::string* c = table.find_meta("config");
    if (!c) throw ConfigError(kModule, "table carries no config metadata");
    return config_from_json(json::parse(*c));
}

// ----- run -----

RunResult run(const RunConfig& cfg) {
    cfg.validate();
    switch (cfg.command) {
    case Command::Density:
        return run_density(cfg, false);
    case Command::InverseDensity:
        return run_density(cfg, true);
    case Command::KernelP:
    case Command::KernelQ:
    case Command::JointXyvr:
        return run_kernel(cfg);
    case Command::Joint2:
        return run_joint2(cfg);
    case Command::Simulate:
        return run_simulate(cfg);
    case Command::Verify:
        return run_verify(cfg);
    }
    throw ConfigError(kModule, "unhandled command");
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IntegrationError*>(&e) || dynamic_cast<const EvaluationError*>(&e) ||
        dynamic_cast<const HorizonError*>(&e))
        return 2;
    return 1;
}

} // namespace ctrw::cli
