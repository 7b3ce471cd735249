// ctrw-fdd: evaluate, simulate and verify CTRW limit laws from the shell.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctrw/cli.hpp"
#include "ctrw/errors.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> model;
    std::optional<double> beta, chi, tau, tol_rel, tol_abs, from_x, from_v, sim_du, sim_c;
    std::optional<std::string> times, sim_kind, sim_waiting, output, format;
    std::vector<std::string> grid;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> workers;
    bool quick = false;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "flat JSON config file; flags override its values");
    sub->add_option("--model", f.model, "example1, example2 or pure-drift");
    sub->add_option("--beta", f.beta, "stability index in (0,1)");
    sub->add_option("--chi", f.chi, "start position");
    sub->add_option("--tau", f.tau, "start time");
    sub->add_option("--times", f.times, "comma-separated, strictly increasing");
    sub->add_option("--grid", f.grid, "axis spec name:min:max:points (repeatable)");
    sub->add_option("--tol-rel", f.tol_rel, "relative quadrature tolerance");
    sub->add_option("--tol-abs", f.tol_abs, "absolute quadrature tolerance");
    sub->add_option("--seed", f.seed, "64-bit seed");
    sub->add_option("--paths", f.paths, "Monte Carlo paths");
    sub->add_option("--from-x", f.from_x, "kernel start position (x0 or y0)");
    sub->add_option("--from-v", f.from_v, "kernel start age v0 or remaining lifetime r0");
    sub->add_option("--sim-kind", f.sim_kind, "limit or ctrw");
    sub->add_option("--sim-waiting", f.sim_waiting, "exact-stable or pareto");
    sub->add_option("--sim-du", f.sim_du, "operational-time step of the limit simulation");
    sub->add_option("--sim-c", f.sim_c, "CTRW scale c");
    sub->add_option("--workers", f.workers, "worker threads (CTRW_FDD_WORKERS overrides)");
    sub->add_option("-o,--output", f.output, "output file (default stdout)");
    sub->add_option("--format", f.format, "csv or json");
    sub->add_flag("--quick", f.quick, "verify: reduced sample sizes");
}

json overrides(const Flags& f, const std::string& command) {
    json j = json::object();
    j["command"] = command;
    if (f.model) j["model"] = *f.model;
    if (f.beta) j["beta"] = *f.beta;
    if (f.chi) j["chi"] = *f.chi;
    if (f.tau) j["tau"] = *f.tau;
    if (f.times) j["times"] = *f.times;
    if (!f.grid.empty()) j["grid"] = f.grid;
    if (f.tol_rel) j["tol.rel"] = *f.tol_rel;
    if (f.tol_abs) j["tol.abs"] = *f.tol_abs;
    if (f.seed) j["seed"] = *f.seed;
    if (f.paths) j["paths"] = *f.paths;
    if (f.from_x) j["from.x"] = *f.from_x;
    if (f.from_v) j["from.v"] = *f.from_v;
    if (f.sim_kind) j["sim.kind"] = *f.sim_kind;
    if (f.sim_waiting) j["sim.waiting"] = *f.sim_waiting;
    if (f.sim_du) j["sim.du"] = *f.sim_du;
    if (f.sim_c) j["sim.c"] = *f.sim_c;
    if (f.workers) j["workers"] = *f.workers;
    if (f.quick) j["quick"] = true;
    if (f.output) j["output.path"] = *f.output;
    if (f.format) j["output.format"] = *f.format;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CTRW limit laws: densities, kernels, two-time laws, simulation and verification"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"density", "density g(t,u) of the stable subordinator"},
        {"inverse-density", "density of the inverse subordinator E_t"},
        {"kernel-p", "transition kernel of (X_{t-}, V_{t-})"},
        {"kernel-q", "transition kernel of (Y_t, R_t)"},
        {"joint2", "joint law of (E_t1, E_t2) on a grid"},
        {"joint-xyvr", "one-time law of (X_{t-}, Y_t, V_{t-}, R_t)"},
        {"simulate", "Monte Carlo paths of the limit process or the discrete CTRW"},
        {"verify", "run the acceptance suite"}};
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto cfg = ctrw::cli::load_config(flags.config, overrides(flags, command));
        const auto result = ctrw::cli::run(cfg);
        if (cfg.output_path.empty()) {
            ctrw::cli::write_tables(std::cout, result.tables, cfg.format);
        } else {
            std::ofstream out(cfg.output_path);
            if (!out) throw std::runtime_error("cannot open output file '" + cfg.output_path + "'");
            ctrw::cli::write_tables(out, result.tables, cfg.format);
        }
        for (const auto& line : result.report) std::cerr << line << '\n';
        return result.exit_code;
    } catch (const std::exception& e) {
        // Library errors carry the originating module as a "module: " prefix.
        std::cerr << "error: " << e.what() << '\n';
        return ctrw::cli::exit_code_for(e);
    }
}
