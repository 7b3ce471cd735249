#include "ctrw/mc.hpp"

#include <algorithm>
#include <cmath>

#include "ctrw/errors.hpp"
#include "ctrw/parallel.hpp"
#include "ctrw/rng.hpp"

namespace ctrw {

namespace {

constexpr const char* kModule = "mc_sim";

void check_times(const std::vector<double>& times, double tau) {
    if (times.empty()) throw DomainError(kModule, "at least one time is required");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw DomainError(kModule, "times must be finite");
        if (i > 0 && !(times[i] > times[i - 1])) throw DomainError(kModule, "times must be strictly increasing");
    }
    if (times.front() < tau) throw DomainError(kModule, "times must not precede tau");
}

} // namespace

// ---------------------------------------------------------------------------
// paths

PathSample sample_path(const ModelSpec& model, double u_max, std::size_t n_steps, std::uint64_t seed, double chi,
                       double tau, std::uint64_t stream) {
    if (!(u_max > 0.0) || !std::isfinite(u_max)) throw ParameterError(kModule, "u_max must be positive and finite");
    if (n_steps < 1) throw ParameterError(kModule, "n_steps must be at least 1");
    PathSample path{{}, {}, {}, model, seed, stream};
    path.u_grid.resize(n_steps + 1);
    path.d_values.resize(n_steps + 1);
    path.a_values.resize(n_steps + 1);
    const double du = u_max / static_cast<double>(n_steps);
    for (std::size_t k = 0; k <= n_steps; ++k) path.u_grid[k] = k == n_steps ? u_max : du * static_cast<double>(k);
    path.d_values[0] = tau;
    path.a_values[0] = chi;
    if (model.kind() == ModelKind::PureDrift) {
        for (std::size_t k = 1; k <= n_steps; ++k) {
            path.d_values[k] = tau + path.u_grid[k];
            path.a_values[k] = chi + path.u_grid[k];
        }
        return path;
    }
    const auto dist = StableDistribution::get(model.beta());
    RngStream rng(seed, stream);
    double dbar = 0.0;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        dbar += dist->sample(path.u_grid[k] - path.u_grid[k - 1], rng);
        path.d_values[k] = tau + dbar;
        path.a_values[k] = model.kind() == ModelKind::Example1 ? chi + path.u_grid[k] : chi + dbar;
    }
    return path;
}

PathSample coarsen(const PathSample& path, std::size_t factor) {
    if (factor < 1) throw ParameterError(kModule, "coarsening factor must be at least 1");
    const std::size_t steps = path.u_grid.size() - 1;
    if (steps % factor != 0) throw ParameterError(kModule, "coarsening factor must divide the number of steps");
    PathSample out{{}, {}, {}, path.model, path.seed, path.stream};
    for (std::size_t k = 0; k <= steps; k += factor) {
        out.u_grid.push_back(path.u_grid[k]);
        out.d_values.push_back(path.d_values[k]);
        out.a_values.push_back(path.a_values[k]);
    }
    return out;
}

RenewalReadout read_renewal(const PathSample& path, double t) {
    if (path.d_values.empty()) throw DomainError(kModule, "empty path");
    const double tau = path.d_values.front();
    if (t < tau) throw DomainError(kModule, "readout time precedes the path start");
    RenewalReadout out;
    out.t = t;
    if (path.model.kind() == ModelKind::PureDrift) {
        // Continuous path: E_t = t - tau and the process never rests.
        if (t > path.d_values.back()) throw HorizonError(kModule, "path ends before t; increase u_max");
        out.e = out.e_lo = t - tau;
        out.g = out.h = t;
        out.x = out.y = path.a_values.front() + (t - tau);
        return out;
    }
    const auto it = std::upper_bound(path.d_values.begin(), path.d_values.end(), t);
    if (it == path.d_values.end()) throw HorizonError(kModule, "path ends before D exceeds t; increase u_max");
    const auto k = static_cast<std::size_t>(it - path.d_values.begin());
    out.e = path.u_grid[k];
    out.e_lo = path.u_grid[k - 1];
    out.g = path.d_values[k - 1];
    out.h = path.d_values[k];
    out.v = t - out.g;
    out.r = out.h - t;
    out.x = path.a_values[k - 1];
    out.y = path.a_values[k];
    return out;
}

RenewalSamples simulate_renewals(const ModelSpec& model, std::vector<double> times, const RenewalOptions& options) {
    check_times(times, options.tau);
    if (options.n_paths < 1) throw ParameterError(kModule, "n_paths must be at least 1");
    if (!(options.du > 0.0)) throw ParameterError(kModule, "du must be positive");
    if (options.coarsen_factor < 1) throw ParameterError(kModule, "coarsening factor must be at least 1");
    const std::size_t nt = times.size(), np = options.n_paths;
    RenewalSamples out;
    out.times = times;
    for (auto* v : {&out.e, &out.e_coarse, &out.g, &out.h, &out.x, &out.y})
        v->assign(nt, std::vector<double>(np, 0.0));

    if (model.kind() == ModelKind::PureDrift) {
        for (std::size_t j = 0; j < nt; ++j) {
            const double e = times[j] - options.tau;
            std::fill(out.e[j].begin(), out.e[j].end(), e);
            std::fill(out.e_coarse[j].begin(), out.e_coarse[j].end(), e);
            std::fill(out.g[j].begin(), out.g[j].end(), times[j]);
            std::fill(out.h[j].begin(), out.h[j].end(), times[j]);
            std::fill(out.x[j].begin(), out.x[j].end(), options.chi + e);
            std::fill(out.y[j].begin(), out.y[j].end(), options.chi + e);
        }
        return out;
    }

    const auto dist = StableDistribution::get(model.beta());
    const double step_scale = std::pow(options.du, 1.0 / model.beta());
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(options.u_max / options.du));
    const bool coupled = model.kind() == ModelKind::Example2;
    const std::uint64_t f = options.coarsen_factor;

    parallel_for(np, options.workers, [&](std::size_t p) {
        RngStream rng(options.seed, p);
        std::uint64_t k = 0;
        double d = options.tau, d_prev = options.tau;
        for (std::size_t j = 0; j < nt; ++j) {
            const double t = times[j];
            while (!(d > t)) {
                if (++k > max_steps) throw HorizonError(kModule, "D did not exceed the last time within u_max");
                d_prev = d;
                d += step_scale * dist->sample1(rng);
            }
            const double u = options.du * static_cast<double>(k);
            const double u_prev = options.du * static_cast<double>(k - 1);
            out.e[j][p] = u;
            // D is increasing, so the first coarse point above t is the
            // first multiple of f at or after k.
            out.e_coarse[j][p] = options.du * static_cast<double>((k + f - 1) / f * f);
            out.g[j][p] = d_prev;
            out.h[j][p] = d;
            out.x[j][p] = coupled ? options.chi + (d_prev - options.tau) : options.chi + u_prev;
            out.y[j][p] = coupled ? options.chi + (d - options.tau) : options.chi + u;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// pre-limit CTRW

void CtrwConfig::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError(kModule, "c must be positive and finite");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError(kModule, "horizon must be positive");
}

CtrwSamples simulate_ctrw(const ModelSpec& model, const CtrwConfig& cfg, std::vector<double> times,
                          std::uint64_t seed, std::size_t n_paths, int workers) {
    cfg.validate();
    check_times(times, 0.0);
    if (times.back() > cfg.horizon) throw HorizonError(kModule, "query time beyond the configured horizon");
    if (n_paths < 1) throw ParameterError(kModule, "n_paths must be at least 1");
    const std::size_t nt = times.size();
    CtrwSamples out;
    out.times = times;
    out.x.assign(nt, std::vector<double>(n_paths, 0.0));
    out.y.assign(nt, std::vector<double>(n_paths, 0.0));

    const ModelKind kind = model.kind();
    std::shared_ptr<const StableDistribution> dist;
    double wait_scale = 1.0 / cfg.c;
    double pareto_exponent = 0.0;
    if (kind != ModelKind::PureDrift) {
        const double beta = model.beta();
        dist = StableDistribution::get(beta);
        if (cfg.waiting_law == WaitingLaw::ExactStable) {
            wait_scale = std::pow(cfg.c, -1.0 / beta);
        } else {
            // c P(W > w) -> w^{-beta}/Gamma(1-beta), the Levy tail of the limit.
            wait_scale = std::pow(cfg.c * std::tgamma(1.0 - beta), -1.0 / beta);
            pareto_exponent = -1.0 / beta;
        }
    }
    const double jump = 1.0 / cfg.c;

    parallel_for(n_paths, workers, [&](std::size_t p) {
        RngStream rng(seed, p);
        auto draw_wait = [&]() -> double {
            if (kind == ModelKind::PureDrift) return 1.0 / cfg.c;
            if (cfg.waiting_law == WaitingLaw::ExactStable) return wait_scale * dist->sample1(rng);
            return wait_scale * std::pow(rng.uniform(), pareto_exponent);
        };
        double s = 0.0;
        double w = draw_wait();
        double t_next = w;
        double s_next = kind == ModelKind::Example2 ? w : jump;
        for (std::size_t j = 0; j < nt; ++j) {
            while (t_next <= times[j]) {
                s = s_next;
                w = draw_wait();
                t_next += w;
                s_next = s + (kind == ModelKind::Example2 ? w : jump);
            }
            out.x[j][p] = s;
            out.y[j][p] = s_next;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// statistics

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw DomainError(kModule, "empirical cdf of an empty sample");
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

EmpiricalCdf empirical_cdf(std::vector<double> samples) { return EmpiricalCdf(std::move(samples)); }

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw DomainError(kModule, "KS distance of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_critical_value(std::size_t n, double alpha) {
    if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) throw DomainError(kModule, "KS critical value needs n >= 1 and 0 < alpha < 1");
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

long find_cell(std::span<const double> edges, double v) {
    if (!(v >= edges.front()) || !(v < edges.back())) return -1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return static_cast<long>(it - edges.begin()) - 1;
}

Histogram2d histogram2d(std::span<const double> xs, std::span<const double> ys, std::vector<double> x_edges,
                        std::vector<double> y_edges) {
    if (xs.size() != ys.size()) throw DomainError(kModule, "histogram2d needs samples of equal length");
    for (const auto* e : {&x_edges, &y_edges}) {
        if (e->size() < 2) throw DomainError(kModule, "histogram2d needs at least two edges per axis");
        for (std::size_t i = 1; i < e->size(); ++i)
            if (!((*e)[i] > (*e)[i - 1])) throw DomainError(kModule, "histogram edges must be strictly increasing");
    }
    Histogram2d h;
    h.x_edges = std::move(x_edges);
    h.y_edges = std::move(y_edges);
    h.n = xs.size();
    std::vector<std::size_t> counts(h.nx() * h.ny(), 0);
    std::size_t coincident = 0, outside = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] == ys[k]) {
            ++coincident;
            continue;
        }
        const long i = find_cell(h.x_edges, xs[k]);
        const long j = find_cell(h.y_edges, ys[k]);
        if (i < 0 || j < 0) {
            ++outside;
            continue;
        }
        ++counts[static_cast<std::size_t>(i) * h.ny() + static_cast<std::size_t>(j)];
    }
    const double n = h.n > 0 ? static_cast<double>(h.n) : 1.0;
    h.frequencies.resize(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) h.frequencies[c] = static_cast<double>(counts[c]) / n;
    h.coincidence_fraction = static_cast<double>(coincident) / n;
    h.outside_fraction = static_cast<double>(outside) / n;
    return h;
}

} // namespace ctrw
