#include "ctrw/fdd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "ctrw/errors.hpp"
#include "ctrw/parallel.hpp"

namespace ctrw {

namespace {

constexpr const char* kModule = "fdd";

// Stable quantities shared by all kernels of one beta.
struct Law {
    explicit Law(double b)
        : beta(b), dist(StableDistribution::get(b)), inv_gamma_1mb(1.0 / std::tgamma(1.0 - b)),
          inv_gamma_b(1.0 / std::tgamma(b)) {}

    double beta;
    std::shared_ptr<const StableDistribution> dist;
    double inv_gamma_1mb;
    double inv_gamma_b;

    /// Levy density.
    double phi(double w) const { return beta * std::pow(w, -beta - 1.0) * inv_gamma_1mb; }
    /// Levy tail Phi([v, inf)).
    double tail(double v) const { return std::pow(v, -beta) * inv_gamma_1mb; }
    /// K_v tail ((v+t)/v)^{-beta}.
    double jump_tail(double v, double t) const { return v > 0.0 ? std::pow(v / (v + t), beta) : (t == 0.0 ? 1.0 : 0.0); }
    /// g(s, u), zero outside s, u > 0.
    double g(double s, double u) const { return (s > 0.0 && u > 0.0) ? dist->pdf(s, u) : 0.0; }
    /// Temporal density of the potential, s^{beta-1}/Gamma(beta).
    double temporal(double s) const { return s > 0.0 ? std::pow(s, beta - 1.0) * inv_gamma_b : 0.0; }
    /// g(s, u) given the factor u^{-1/beta}, for loops at fixed u.
    double g_scaled(double s, double inv_width) const { return s > 0.0 ? inv_width * dist->pdf1(s * inv_width) : 0.0; }
    double inv_width(double u) const { return std::pow(u, -1.0 / beta); }
    /// Width of g(., u) in its first argument.
    double g_scale(double u) const { return std::pow(u, 1.0 / beta); }
};

using LawPtr = std::shared_ptr<const Law>;

LawPtr law_for(const ModelSpec& model) { return std::make_shared<const Law>(model.beta()); }

// Convergence bookkeeping threaded through nested evaluations.
struct Status {
    bool converged = true;
};

// Spec with the given tolerances and no endpoint information.
quad::QuadratureSpec tol_spec(double rel_tol, double abs_tol = 0.0, int max_subdivisions = 400) {
    quad::QuadratureSpec s;
    s.rel_tol = rel_tol;
    s.abs_tol = abs_tol;
    s.max_subdivisions = max_subdivisions;
    return s;
}

struct Feature {
    /// Width of a boundary layer at this end (0: none).
    double scale = 0.0;
    /// Declared power-law exponent at this end.
    std::optional<double> exponent;
};

// int_0^L F(a, b) with a the distance from 0 and b the distance from L.
// The range is split at L/2; each half that has a boundary layer much
// thinner than the half is further split at the layer width, with a
// logarithmic variable above it.
double integrate_two_sided(FunctionRef<double(double, double)> f, double length, Feature left, Feature right,
                           double rel_tol, double abs_tol, Status& status) {
    if (!(length > 0.0)) return 0.0;
    const double half = 0.5 * length;
    auto needs_split = [&](const Feature& f) { return f.scale > 0.0 && f.scale < 0.25 * half; };
    if (!needs_split(left) && !needs_split(right)) {
        quad::QuadratureSpec spec = tol_spec(rel_tol, abs_tol, 200);
        spec.left_exponent = left.exponent;
        spec.right_exponent = right.exponent;
        const auto r = quad::integrate_1d_gaps([&](const quad::Abscissa& p) { return f(p.lo_gap, p.hi_gap); }, 0.0,
                                               length, spec);
        if (!r.converged) status.converged = false;
        return r.value;
    }
    double total = 0.0;
    // Later pieces only need accuracy relative to what is already summed.
    auto add = [&](const quad::QuadratureResult& r) {
        total += r.value;
        if (!r.converged) status.converged = false;
    };
    auto piece_abs = [&] { return std::max(abs_tol, 0.5 * rel_tol * std::abs(total)); };
    for (int side = 0; side < 2; ++side) {
        const Feature& feat = side == 0 ? left : right;
        auto at = [&](double d) { return side == 0 ? f(d, length - d) : f(length - d, d); };
        quad::QuadratureSpec spec = tol_spec(rel_tol, piece_abs(), 200);
        if (feat.exponent) spec.with_left(*feat.exponent);
        if (needs_split(feat)) {
            add(quad::integrate_1d(
                [&](double eta) {
                    const double d = std::exp(eta);
                    return at(d) * d;
                },
                std::log(feat.scale), std::log(half), tol_spec(rel_tol, piece_abs(), 200)));
            spec.abs_tol = piece_abs();
            add(quad::integrate_1d_gaps([&](const quad::Abscissa& p) { return at(p.lo_gap); }, 0.0, feat.scale, spec));
        } else {
            add(quad::integrate_1d_gaps([&](const quad::Abscissa& p) { return at(p.lo_gap); }, 0.0, half, spec));
        }
    }
    return total;
}

constexpr double kInnerTol = 1e-8;

bool on_line(double value, double expected) {
    return std::abs(value - expected) <= 1e-9 * std::max({1.0, std::abs(value), std::abs(expected)});
}

quad::QuadratureSpec spec_with(std::optional<double> left, std::optional<double> right, std::optional<double> tail = {},
                               double scale = 1.0) {
    quad::QuadratureSpec s;
    s.left_exponent = left;
    s.right_exponent = right;
    s.tail_decay = tail;
    s.scale = scale;
    s.max_subdivisions = 200;
    return s;
}

KernelDensity single_atom(std::vector<std::string> coords, std::vector<double> location, std::string support) {
    KernelDensity k;
    k.coordinates = std::move(coords);
    k.atoms.push_back({std::move(location), 1.0});
    k.support = std::move(support);
    return k;
}

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(kModule, "kernel time must be positive and finite");
}

} // namespace

// ---------------------------------------------------------------------------
// KernelDensity

double KernelDensity::density_free(std::span<const double> free) const {
    if (!has_density()) return 0.0;
    const std::size_t n = axes.size();
    std::array<double, 3> lo_gap{}, hi_gap{};
    for (std::size_t k = 0; k < n; ++k) {
        const quad::AxisRange range = axes[k].bounds(free.subspan(0, k));
        if (!(free[k] > range.lo && free[k] < range.hi)) return 0.0;
        lo_gap[k] = free[k] - range.lo;
        hi_gap[k] = range.hi - free[k];
    }
    return density(quad::NestedPoint{free.subspan(0, n), std::span<const double>(lo_gap.data(), n),
                                     std::span<const double>(hi_gap.data(), n)});
}

double KernelDensity::density_at(std::span<const double> state) const {
    if (!has_density()) return 0.0;
    const auto free = project(state);
    if (!free) return 0.0;
    return density_free(*free);
}

std::vector<double> KernelDensity::embed_point(std::span<const double> free) const {
    std::vector<double> state(coordinates.size());
    embed(free, state);
    return state;
}

double KernelDensity::atom_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight;
    return m;
}

MassReport total_mass(const KernelDensity& kernel, double rel_tol) {
    MassReport report;
    report.atom_mass = kernel.atom_mass();
    if (kernel.has_density()) {
        std::vector<quad::NestedAxis> axes = kernel.axes;
        for (auto& a : axes) a.spec.rel_tol = rel_tol;
        const auto r = quad::integrate_nested_gaps([&](const quad::NestedPoint& p) { return kernel.density(p); }, axes);
        report.continuous_mass = r.value;
        report.error_estimate = r.error_estimate;
        report.converged = r.converged;
    }
    report.total = report.atom_mass + report.continuous_mass;
    return report;
}

double marginal_density(const KernelDensity& kernel, std::size_t axis, double value, double rel_tol) {
    if (!kernel.has_density()) return 0.0;
    const std::size_t n = kernel.axes.size();
    if (axis >= n) throw DomainError(kModule, "marginal axis out of range");
    if (n == 1) {
        const double v = value;
        return kernel.density_free(std::span<const double>(&v, 1));
    }
    // Remaining axes; the fixed coordinate is re-inserted before calling
    // the original bounds.
    auto full_outer = [axis, value](std::span<const double> outer) {
        std::vector<double> full(outer.begin(), outer.end());
        if (axis <= full.size()) full.insert(full.begin() + static_cast<std::ptrdiff_t>(axis), value);
        return full;
    };
    std::vector<quad::NestedAxis> rest;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == axis) continue;
        quad::NestedAxis a = kernel.axes[k];
        a.spec.rel_tol = rel_tol;
        const auto bounds = kernel.axes[k].bounds;
        a.bounds = [bounds, full_outer, k](std::span<const double> outer) {
            auto full = full_outer(outer);
            full.resize(k);
            return bounds(full);
        };
        rest.push_back(std::move(a));
    }
    auto integrand = [&](const quad::NestedPoint& p) {
        std::array<double, 3> free{};
        std::size_t j = 0;
        for (std::size_t k = 0; k < n; ++k) free[k] = (k == axis) ? value : p.x[j++];
        return kernel.density_free(std::span<const double>(free.data(), n));
    };
    return quad::integrate_nested_gaps(integrand, rest).value;
}

// ---------------------------------------------------------------------------
// P kernel

namespace {

// Continuous part of P_t for a stable model; `big_t` = t - to.v is passed
// separately so callers near v = t keep its precision.
double p_density_impl(const Law& law, ModelKind kind, StateXV from, double v, double big_t, double x, double tol) {
    if (!(v > 0.0) || !(big_t > 0.0)) return 0.0;
    Status status;
    if (kind == ModelKind::Example1) {
        const double u = x - from.x;
        if (!(u > 0.0)) return 0.0;
        if (from.v == 0.0) return law.g(big_t, u) * law.tail(v);
        const double iw = law.inv_width(u);
        return std::pow(from.v / v, law.beta) * integrate_two_sided(
                   [&](double a, double b) { return law.g_scaled(b, iw) * law.phi(from.v + a); }, big_t,
                   Feature{from.v, std::nullopt}, Feature{law.g_scale(u), std::nullopt}, tol, 0.0, status);
    }
    if (from.v == 0.0) return law.tail(v) * law.temporal(big_t);
    return std::pow(from.v / v, law.beta) * integrate_two_sided(
               [&](double a, double b) { return law.temporal(b) * law.phi(from.v + a); }, big_t,
               Feature{from.v, std::nullopt}, Feature{0.0, law.beta - 1.0}, tol, 0.0, status);
}

// Continuous part of Q_t given elapsed time big_t = t - r0 > 0 since the
// start's pending renewal.
double q_density_impl(const Law& law, ModelKind kind, double big_t, double r, double u, double tol) {
    if (!(big_t > 0.0) || !(r > 0.0)) return 0.0;
    Status status;
    if (kind == ModelKind::Example1) {
        if (!(u > 0.0)) return 0.0;
        const double iw = law.inv_width(u);
        return integrate_two_sided([&](double a, double b) { return law.g_scaled(a, iw) * law.phi(r + b); }, big_t,
                                   Feature{law.g_scale(u), std::nullopt}, Feature{r, std::nullopt}, tol, 0.0, status);
    }
    return integrate_two_sided([&](double a, double b) { return law.temporal(a) * law.phi(r + b); }, big_t,
                               Feature{0.0, law.beta - 1.0}, Feature{r, std::nullopt}, tol, 0.0, status);
}

} // namespace

double p_density(const ModelSpec& model, double t, StateXV from, StateXV to) {
    check_time(t);
    if (model.kind() == ModelKind::PureDrift) return 0.0;
    if (!(from.v >= 0.0)) throw DomainError(kModule, "start age must be non-negative");
    if (!(to.v > 0.0 && to.v < t)) return 0.0;
    if (model.kind() == ModelKind::Example2 && !on_line(to.x, from.x + from.v + t - to.v)) return 0.0;
    const Law law(model.beta());
    return p_density_impl(law, model.kind(), from, to.v, t - to.v, to.x, kInnerTol);
}

KernelDensity p_kernel(const ModelSpec& model, double t, StateXV from) {
    check_time(t);
    if (!(from.v >= 0.0) || !std::isfinite(from.v) || !std::isfinite(from.x))
        throw DomainError(kModule, "start state must be finite with non-negative age");
    const std::vector<std::string> coords{"x", "v"};
    if (model.kind() == ModelKind::PureDrift) {
        if (from.v != 0.0) throw DomainError(kModule, "pure-drift states always have age 0");
        return single_atom(coords, {from.x + t, 0.0}, "atom at (x0 + t, 0)");
    }
    const auto law = law_for(model);
    const double beta = law->beta;
    const double x0 = from.x;
    const double v0 = from.v;

    KernelDensity k;
    k.coordinates = coords;
    if (v0 > 0.0) k.atoms.push_back({{x0, v0 + t}, law->jump_tail(v0, t)});

    if (model.kind() == ModelKind::Example1) {
        k.axis_names = {"v", "x"};
        k.axes.push_back(quad::NestedAxis::fixed(0.0, t, spec_with(-beta, v0 > 0.0 ? beta : beta - 1.0)));
        k.axes.push_back({[x0, t, beta](std::span<const double> outer) {
                              return quad::AxisRange{x0, quad::kInfinity, std::pow(std::max(t - outer[0], 1e-300), beta)};
                          },
                          spec_with({}, {})});
        if (v0 == 0.0) {
            k.density = [law](const quad::NestedPoint& p) { return law->g(p.hi_gap[0], p.lo_gap[1]) * law->tail(p.x[0]); };
        } else {
            k.density = [law, v0](const quad::NestedPoint& p) {
                return p_density_impl(*law, ModelKind::Example1, {0.0, v0}, p.x[0], p.hi_gap[0], p.lo_gap[1], kInnerTol);
            };
        }
        k.embed = [](std::span<const double> f, std::span<double> s) {
            s[0] = f[1];
            s[1] = f[0];
        };
        k.project = [](std::span<const double> s) -> std::optional<std::vector<double>> {
            return std::vector<double>{s[1], s[0]};
        };
        k.support = "x > x0, 0 < v < t";
        return k;
    }

    // Example2: carried by the line x = x0 + v0 + t - v.
    const double shift = x0 + v0 + t;
    k.axis_names = {"v"};
    k.axes.push_back(quad::NestedAxis::fixed(0.0, t, spec_with(-beta, v0 > 0.0 ? beta : beta - 1.0)));
    if (v0 == 0.0) {
        k.density = [law](const quad::NestedPoint& p) { return law->tail(p.x[0]) * law->temporal(p.hi_gap[0]); };
    } else {
        k.density = [law, v0](const quad::NestedPoint& p) {
            return p_density_impl(*law, ModelKind::Example2, {0.0, v0}, p.x[0], p.hi_gap[0], 0.0, kInnerTol);
        };
    }
    k.embed = [shift](std::span<const double> f, std::span<double> s) {
        s[0] = shift - f[0];
        s[1] = f[0];
    };
    k.project = [shift](std::span<const double> s) -> std::optional<std::vector<double>> {
        if (!on_line(s[0], shift - s[1])) return std::nullopt;
        return std::vector<double>{s[1]};
    };
    k.support = "line x = x0 + v0 + t - v, 0 < v < t";
    return k;
}

// ---------------------------------------------------------------------------
// Q kernel

double q_density(const ModelSpec& model, double t, StateYR from, StateYR to) {
    check_time(t);
    if (model.kind() == ModelKind::PureDrift) return 0.0;
    if (!(from.r >= 0.0)) throw DomainError(kModule, "start remaining time must be non-negative");
    if (from.r >= t) return 0.0;
    const double big_t = t - from.r;
    if (model.kind() == ModelKind::Example2 && !on_line(to.y, from.y + big_t + to.r)) return 0.0;
    const Law law(model.beta());
    return q_density_impl(law, model.kind(), big_t, to.r, to.y - from.y, kInnerTol);
}

KernelDensity q_kernel(const ModelSpec& model, double t, StateYR from) {
    check_time(t);
    if (!(from.r >= 0.0) || !std::isfinite(from.r) || !std::isfinite(from.y))
        throw DomainError(kModule, "start state must be finite with non-negative remaining time");
    const std::vector<std::string> coords{"y", "r"};
    // Frozen branch: the next renewal is still ahead.
    if (from.r > t) return single_atom(coords, {from.y, from.r - t}, "atom at (y0, r0 - t)");
    const double big_t = t - from.r;
    if (model.kind() == ModelKind::PureDrift)
        return single_atom(coords, {from.y + big_t, 0.0}, "atom at (y0 + t - r0, 0)");
    if (big_t == 0.0) return single_atom(coords, {from.y, 0.0}, "atom at (y0, 0)");

    const auto law = law_for(model);
    const double beta = law->beta;
    const double y0 = from.y;
    KernelDensity k;
    k.coordinates = coords;
    if (model.kind() == ModelKind::Example1) {
        k.axis_names = {"r", "y"};
        k.axes.push_back({[big_t](std::span<const double>) { return quad::AxisRange{0.0, quad::kInfinity, big_t}; },
                          spec_with(-beta, {}, 1.0 + beta)});
        k.axes.push_back({[y0, big_t, beta](std::span<const double>) {
                              return quad::AxisRange{y0, quad::kInfinity, std::pow(big_t, beta)};
                          },
                          spec_with({}, {})});
        k.density = [law, big_t](const quad::NestedPoint& p) {
            return q_density_impl(*law, ModelKind::Example1, big_t, p.lo_gap[0], p.lo_gap[1], kInnerTol);
        };
        k.embed = [](std::span<const double> f, std::span<double> s) {
            s[0] = f[1];
            s[1] = f[0];
        };
        k.project = [](std::span<const double> s) -> std::optional<std::vector<double>> {
            return std::vector<double>{s[1], s[0]};
        };
        k.support = "y > y0, r > 0";
        return k;
    }
    const double shift = y0 + big_t;
    k.axis_names = {"r"};
    k.axes.push_back({[big_t](std::span<const double>) { return quad::AxisRange{0.0, quad::kInfinity, big_t}; },
                      spec_with(-beta, {}, 1.0 + beta)});
    k.density = [law, big_t](const quad::NestedPoint& p) {
        return q_density_impl(*law, ModelKind::Example2, big_t, p.lo_gap[0], 0.0, kInnerTol);
    };
    k.embed = [shift](std::span<const double> f, std::span<double> s) {
        s[0] = shift + f[0];
        s[1] = f[0];
    };
    k.project = [shift](std::span<const double> s) -> std::optional<std::vector<double>> {
        if (!on_line(s[0], shift + s[1])) return std::nullopt;
        return std::vector<double>{s[1]};
    };
    k.support = "line y = y0 + (t - r0) + r, r > 0";
    return k;
}

// ---------------------------------------------------------------------------
// joint law of (X_{t-}, Y_t, V_{t-}, R_t)

KernelDensity joint_xyvr(const ModelSpec& model, double chi, double tau, double t) {
    if (!std::isfinite(chi) || !std::isfinite(tau) || !std::isfinite(t)) throw DomainError(kModule, "non-finite input");
    if (t < tau) throw DomainError(kModule, "joint_xyvr needs t >= tau");
    const std::vector<std::string> coords{"x", "y", "v", "r"};
    if (t == tau) return single_atom(coords, {chi, chi, 0.0, 0.0}, "atom at (chi, chi, 0, 0)");
    const double big_t = t - tau;
    if (model.kind() == ModelKind::PureDrift)
        return single_atom(coords, {chi + big_t, chi + big_t, 0.0, 0.0}, "atom at (chi + t - tau, chi + t - tau, 0, 0)");

    const auto law = law_for(model);
    const double beta = law->beta;
    KernelDensity k;
    k.coordinates = coords;
    auto r_axis = quad::NestedAxis{[](std::span<const double> outer) {
                                       return quad::AxisRange{0.0, quad::kInfinity, std::max(outer[0], 1e-300)};
                                   },
                                   spec_with({}, {}, 1.0 + beta)};
    if (model.kind() == ModelKind::Example1) {
        // U * K: renewal at (x, s = t - v) from the potential, then a jump
        // of temporal size v + r with no spatial part.
        k.axis_names = {"v", "x", "r"};
        k.axes.push_back(quad::NestedAxis::fixed(0.0, big_t, spec_with(-beta, beta - 1.0)));
        k.axes.push_back({[chi, big_t, beta](std::span<const double> outer) {
                              return quad::AxisRange{chi, quad::kInfinity,
                                                     std::pow(std::max(big_t - outer[0], 1e-300), beta)};
                          },
                          spec_with({}, {})});
        k.axes.push_back(r_axis);
        k.density = [law](const quad::NestedPoint& p) {
            return law->g(p.hi_gap[0], p.lo_gap[1]) * law->phi(p.x[0] + p.lo_gap[2]);
        };
        k.embed = [](std::span<const double> f, std::span<double> s) {
            s[0] = f[1];
            s[1] = f[1];
            s[2] = f[0];
            s[3] = f[2];
        };
        k.project = [](std::span<const double> s) -> std::optional<std::vector<double>> {
            if (!on_line(s[1], s[0])) return std::nullopt;
            return std::vector<double>{s[2], s[0], s[3]};
        };
        k.support = "y = x > chi, 0 < v < t - tau, r > 0";
        return k;
    }
    // Example2: X = chi + (t - tau) - V, Y = chi + (t - tau) + R.
    const double shift = chi + big_t;
    k.axis_names = {"v", "r"};
    k.axes.push_back(quad::NestedAxis::fixed(0.0, big_t, spec_with(-beta, beta - 1.0)));
    k.axes.push_back(r_axis);
    k.density = [law](const quad::NestedPoint& p) { return law->temporal(p.hi_gap[0]) * law->phi(p.x[0] + p.lo_gap[1]); };
    k.embed = [shift](std::span<const double> f, std::span<double> s) {
        s[0] = shift - f[0];
        s[1] = shift + f[1];
        s[2] = f[0];
        s[3] = f[1];
    };
    k.project = [shift](std::span<const double> s) -> std::optional<std::vector<double>> {
        if (!on_line(s[0], shift - s[2]) || !on_line(s[1], shift + s[3])) return std::nullopt;
        return std::vector<double>{s[2], s[3]};
    };
    k.support = "x = chi + t - tau - v, y = chi + t - tau + r";
    return k;
}

// ---------------------------------------------------------------------------
// Chapman-Kolmogorov composition

double compose_p_density(const ModelSpec& model, double t1, double t2, StateXV from, StateXV to,
                         const CompositionOptions& options) {
    check_time(t1);
    check_time(t2);
    if (model.kind() == ModelKind::PureDrift) return 0.0;
    if (!(from.v >= 0.0)) throw DomainError(kModule, "start age must be non-negative");
    const Law law(model.beta());
    const ModelKind kind = model.kind();
    const double beta = law.beta;
    const double inner_tol = 0.1 * options.rel_tol;
    double total = 0.0;
    // First step stays frozen, second step moves.
    if (from.v > 0.0) total += law.jump_tail(from.v, t1) * p_density(model, t2, {from.x, from.v + t1}, to);
    // First step's density pushed through the second step's frozen atom.
    if (to.v > t2) {
        const StateXV mid{to.x, to.v - t2};
        total += p_density(model, t1, from, mid) * law.jump_tail(mid.v, t2);
    }
    if (!(to.v > 0.0)) return total;
    // Both steps continuous; the outer variable is the intermediate age.
    quad::QuadratureSpec spec = tol_spec(options.rel_tol, options.abs_tol, 200);
    spec.with_left(-beta).with_right(from.v > 0.0 ? beta : beta - 1.0);
    if (kind == ModelKind::Example1) {
        const double length = to.x - from.x;
        if (!(length > 0.0)) return total;
        // Inner variable: the first step's spatial increment, which
        // concentrates near 0 on the scale (t1 - v')^beta.
        const auto r = quad::integrate_1d_gaps(
            [&](const quad::Abscissa& p) {
                const double vm = p.x, rest1 = p.hi_gap;
                if (!(to.v < t2 + vm)) return 0.0;
                Status status;
                return integrate_two_sided(
                    [&](double a, double b) {
                        const double first = p_density_impl(law, kind, from, vm, rest1, from.x + a, inner_tol);
                        if (first == 0.0) return 0.0;
                        return first * p_density_impl(law, kind, {to.x - b, vm}, to.v, t2 - to.v, to.x, inner_tol);
                    },
                    length, Feature{std::pow(rest1, beta), std::nullopt}, Feature{}, options.rel_tol,
                    0.1 * options.abs_tol, status);
            },
            0.0, t1, spec);
        return total + r.value;
    }
    const double shift = from.x + from.v + t1;
    const auto r = quad::integrate_1d_gaps(
        [&](const quad::Abscissa& p) {
            const StateXV mid{shift - p.x, p.x};
            if (!on_line(to.x, mid.x + mid.v + t2 - to.v)) return 0.0;
            return p_density_impl(law, kind, from, p.x, p.hi_gap, mid.x, inner_tol) *
                   p_density_impl(law, kind, mid, to.v, t2 - to.v, to.x, inner_tol);
        },
        0.0, t1, spec);
    return total + r.value;
}

double compose_q_density(const ModelSpec& model, double t1, double t2, StateYR from, StateYR to,
                         const CompositionOptions& options) {
    check_time(t1);
    check_time(t2);
    if (model.kind() == ModelKind::PureDrift) return 0.0;
    if (!(from.r >= 0.0)) throw DomainError(kModule, "start remaining time must be non-negative");
    double total = 0.0;
    // Atom of the first step (frozen branch, or renewal exactly at t1).
    if (from.r >= t1) return q_density(model, t2, {from.y, from.r - t1}, to);
    const Law law(model.beta());
    const ModelKind kind = model.kind();
    const double beta = law.beta;
    const double inner_tol = 0.1 * options.rel_tol;
    const double big_t1 = t1 - from.r;
    // First step's density pushed through the second step's frozen atom.
    total += q_density(model, t1, from, {to.y, to.r + t2});
    if (!(to.r > 0.0)) return total;
    // Both steps continuous; the outer variable is the intermediate
    // remaining time r' < t2, with t2 - r' elapsed in the second step.
    quad::QuadratureSpec spec = tol_spec(options.rel_tol, options.abs_tol, 200);
    spec.with_left(-beta).with_right(beta);
    if (kind == ModelKind::Example1) {
        const double length = to.y - from.y;
        if (!(length > 0.0)) return total;
        // Inner variable: the first step's spatial increment; the second
        // step's increment concentrates near 0 on the scale (t2 - r')^beta.
        const auto r = quad::integrate_1d_gaps(
            [&](const quad::Abscissa& p) {
                const double rm = p.x, big_t2 = p.hi_gap;
                Status status;
                return integrate_two_sided(
                    [&](double a, double b) {
                        const double first = q_density_impl(law, kind, big_t1, rm, a, inner_tol);
                        if (first == 0.0) return 0.0;
                        return first * q_density_impl(law, kind, big_t2, to.r, b, inner_tol);
                    },
                    length, Feature{std::pow(big_t1, beta), std::nullopt}, Feature{std::pow(big_t2, beta), std::nullopt},
                    options.rel_tol, 0.1 * options.abs_tol, status);
            },
            0.0, t2, spec);
        return total + r.value;
    }
    if (!on_line(to.y, from.y + big_t1 + t2 + to.r)) return total;
    const auto r = quad::integrate_1d_gaps(
        [&](const quad::Abscissa& p) {
            return q_density_impl(law, kind, big_t1, p.x, 0.0, inner_tol) *
                   q_density_impl(law, kind, p.hi_gap, to.r, 0.0, inner_tol);
        },
        0.0, t2, spec);
    return total + r.value;
}

// ---------------------------------------------------------------------------
// two-time law of the inverse subordinator

namespace {

void check_two_times(double t1, double t2) {
    if (!(t1 > 0.0) || !std::isfinite(t2)) throw DomainError(kModule, "two-time law needs 0 < t1 < t2 < inf");
    if (!(t1 < t2)) throw DomainError(kModule, "two-time law needs t1 < t2");
}

double diagonal_density_impl(const Law& law, double t1, double delta, double x, double tol, Status& status) {
    if (!(x > 0.0)) return 0.0;
    return integrate_two_sided(
        [&](double v, double b) { return law.g(b, x) * std::pow(v + delta, -law.beta) * law.inv_gamma_1mb; }, t1,
        Feature{}, Feature{law.g_scale(x), std::nullopt}, tol, 0.0, status);
}

// f(x, y) = int_0^{t1} dv g(t1 - v, x) Phi(v, inf)
//           int_0^{D} dw (v/w)^beta int_0^{D - w} dsigma g(D - w - sigma, y - x) phi(v + sigma)
// with D = t2 - t1 and s = v + sigma the completed waiting time. The factor
// Phi(v, inf) (v/w)^beta is evaluated as w^{-beta}/Gamma(1-beta).
double offdiagonal_impl(const Law& law, double t1, double delta, double x, double y, double tol, Status& status) {
    const double z = y - x;
    if (!(x > 0.0) || !(z > 0.0)) return 0.0;
    const double zs = law.g_scale(z);
    auto over_w = [&](double v) {
        return integrate_two_sided(
            [&](double w, double rest) {
                const double inner = integrate_two_sided(
                    [&](double sigma, double b) { return law.g(b, z) * law.phi(v + sigma); }, rest,
                    Feature{v, std::nullopt}, Feature{zs, std::nullopt}, tol * 0.1, 0.0, status);
                return std::pow(w, -law.beta) * law.inv_gamma_1mb * inner;
            },
            delta, Feature{0.0, -law.beta}, Feature{zs, std::nullopt}, tol * 0.3, 0.0, status);
    };
    return integrate_two_sided([&](double v, double b) { return law.g(b, x) * over_w(v); }, t1,
                               Feature{0.0, -law.beta}, Feature{law.g_scale(x), std::nullopt}, tol, 0.0, status);
}

double overshoot_impl(const Law& law, double t1, double delta, double x, double y, double tol, Status& status) {
    const double z = y - x;
    if (!(x > 0.0) || !(z > 0.0)) return 0.0;
    return integrate_two_sided(
        [&](double r, double s) {
            if (!(s > 0.0)) return 0.0;
            const double h = law.dist->inverse_pdf(s, z);
            return h == 0.0 ? 0.0 : q_density_impl(law, ModelKind::Example1, t1, r, x, 0.1 * tol) * h;
        },
        delta, Feature{0.0, -law.beta}, Feature{law.g_scale(z), std::nullopt}, tol, 0.0, status);
}

double offdiagonal(TwoTimeMethod method, const Law& law, double t1, double delta, double x, double y, double tol,
                   Status& status) {
    return method == TwoTimeMethod::TripleIntegral ? offdiagonal_impl(law, t1, delta, x, y, tol, status)
                                                   : overshoot_impl(law, t1, delta, x, y, tol, status);
}

} // namespace

double two_time_diagonal_density(const StableParams& params, double t1, double t2, double x, double rel_tol) {
    check_two_times(t1, t2);
    const Law law(params.beta());
    Status status;
    return diagonal_density_impl(law, t1, t2 - t1, x, rel_tol, status);
}

double two_time_offdiagonal_density(const StableParams& params, double t1, double t2, double x, double y,
                                    double rel_tol) {
    check_two_times(t1, t2);
    const Law law(params.beta());
    Status status;
    return offdiagonal_impl(law, t1, t2 - t1, x, y, rel_tol, status);
}

double two_time_offdiagonal_density_overshoot(const StableParams& params, double t1, double t2, double x, double y,
                                              double rel_tol) {
    check_two_times(t1, t2);
    const Law law(params.beta());
    Status status;
    return overshoot_impl(law, t1, t2 - t1, x, y, rel_tol, status);
}

double two_time_diagonal_mass(const StableParams& params, double t1, double t2, double rel_tol) {
    check_two_times(t1, t2);
    const Law law(params.beta());
    Status status;
    quad::QuadratureSpec spec = tol_spec(rel_tol * 10.0, 0.0, 400);
    spec.with_scale(std::pow(t1, law.beta));
    return quad::integrate_1d([&](double x) { return diagonal_density_impl(law, t1, t2 - t1, x, rel_tol, status); },
                              0.0, quad::kInfinity, spec)
        .value;
}

double two_time_marginal(const StableParams& params, double t1, double t2, int which, double value, double rel_tol,
                         TwoTimeMethod method) {
    check_two_times(t1, t2);
    if (which != 1 && which != 2) throw DomainError(kModule, "marginal index must be 1 or 2");
    if (!(value > 0.0)) return 0.0;
    const Law law(params.beta());
    const double delta = t2 - t1;
    Status status;
    const double diag = diagonal_density_impl(law, t1, delta, value, rel_tol * 0.1, status);
    if (which == 1) {
        quad::QuadratureSpec spec = tol_spec(rel_tol, 0.0, 200);
        spec.with_scale(std::pow(delta, law.beta));
        const auto r = quad::integrate_1d(
            [&](double z) { return offdiagonal(method, law, t1, delta, value, value + z, rel_tol * 0.1, status); }, 0.0,
            quad::kInfinity, spec);
        return diag + r.value;
    }
    quad::QuadratureSpec spec = tol_spec(rel_tol, 0.0, 200);
    const auto r = quad::integrate_1d_gaps(
        [&](const quad::Abscissa& p) {
            return offdiagonal(method, law, t1, delta, p.x, value, rel_tol * 0.1, status);
        },
        0.0, value, spec);
    return diag + r.value;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t cells) {
    if (cells == 0 || !(hi > lo)) throw DomainError(kModule, "grid needs hi > lo and at least one cell");
    std::vector<double> e(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
    e[cells] = hi;
    return e;
}

double JointGrid::cell_mass(std::size_t i, std::size_t j) const {
    return value(i, j) * (x_edges[i + 1] - x_edges[i]) * (y_edges[j + 1] - y_edges[j]);
}

double JointGrid::diagonal_cell_mass(std::size_t i) const { return diagonal_density[i] * (x_edges[i + 1] - x_edges[i]); }

double JointGrid::grid_mass() const {
    double m = 0.0;
    for (std::size_t i = 0; i < nx(); ++i) {
        m += diagonal_cell_mass(i);
        for (std::size_t j = 0; j < ny(); ++j) m += cell_mass(i, j);
    }
    return m;
}

JointGrid joint_inverse_two_times(const StableParams& params, double t1, double t2, std::vector<double> x_edges,
                                  std::vector<double> y_edges, const TwoTimeOptions& options) {
    check_two_times(t1, t2);
    for (const auto* edges : {&x_edges, &y_edges}) {
        if (edges->size() < 2) throw DomainError(kModule, "grid needs at least two edges per axis");
        for (std::size_t i = 1; i < edges->size(); ++i)
            if (!((*edges)[i] > (*edges)[i - 1])) throw DomainError(kModule, "grid edges must be strictly increasing");
    }
    if (x_edges.front() < 0.0 || y_edges.front() < 0.0) throw DomainError(kModule, "grid must lie in [0, inf)");
    const Law law(params.beta());
    const double delta = t2 - t1;
    const auto& gl = quad::gauss_legendre(options.cell_order);

    JointGrid grid;
    grid.x_edges = std::move(x_edges);
    grid.y_edges = std::move(y_edges);
    const std::size_t nx = grid.nx(), ny = grid.ny();
    grid.values.assign(nx * ny, 0.0);
    grid.diagonal_density.assign(nx, 0.0);
    std::vector<char> bad(nx * ny + nx, 0);

    // Gauss-Legendre on [a, b] of f.
    auto gl_integrate = [&](double a, double b, auto&& f) {
        double s = 0.0;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k)
            s += gl.weights[k] * f(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k]);
        return 0.5 * (b - a) * s;
    };

    parallel_for(nx * ny + nx, options.workers, [&](std::size_t idx) {
        Status status;
        if (idx >= nx * ny) {
            const std::size_t i = idx - nx * ny;
            const double a = grid.x_edges[i], b = grid.x_edges[i + 1];
            const double m = gl_integrate(a, b, [&](double x) {
                return diagonal_density_impl(law, t1, delta, x, options.rel_tol * 0.1, status);
            });
            grid.diagonal_density[i] = m / (b - a);
            bad[idx] = status.converged ? 0 : 1;
            return;
        }
        const std::size_t i = idx / ny, j = idx % ny;
        const double xa = grid.x_edges[i], xb = grid.x_edges[i + 1];
        const double ya = grid.y_edges[j], yb = grid.y_edges[j + 1];
        if (yb <= xa) return;
        // Split x where the lower y limit max(ya, x) changes form or the
        // region ends.
        std::vector<double> cuts{xa};
        for (double c : {ya, yb})
            if (c > xa && c < xb) cuts.push_back(c);
        cuts.push_back(xb);
        double mass = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double a = cuts[c], b = std::min(cuts[c + 1], yb);
            if (!(b > a)) continue;
            mass += gl_integrate(a, b, [&](double x) {
                const double lo = std::max(ya, x);
                if (!(yb > lo)) return 0.0;
                return gl_integrate(lo, yb, [&](double y) {
                    return offdiagonal(options.method, law, t1, delta, x, y, options.rel_tol, status);
                });
            });
        }
        grid.values[idx] = mass / ((xb - xa) * (yb - ya));
        bad[idx] = status.converged ? 0 : 1;
    });
    for (std::size_t idx = 0; idx < bad.size(); ++idx)
        if (bad[idx]) grid.flagged.push_back(idx);

    grid.diagonal_atom = two_time_diagonal_mass(params, t1, t2);
    double diag_in = 0.0;
    for (std::size_t i = 0; i < nx; ++i) diag_in += grid.diagonal_cell_mass(i);
    grid.diagonal_outside = std::max(0.0, grid.diagonal_atom - diag_in);
    double off = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) off += grid.cell_mass(i, j);
    grid.offdiagonal_mass = off;
    return grid;
}

// ---------------------------------------------------------------------------
// FddChain

FddChain::FddChain(ModelSpec model, double chi, double tau, std::vector<double> times)
    : model_(std::move(model)), chi_(chi), tau_(tau), times_(std::move(times)) {
    if (times_.empty()) throw DomainError(kModule, "fdd_chain needs at least one time");
    if (times_.front() < tau_) throw DomainError(kModule, "fdd_chain times must not precede tau");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw DomainError(kModule, "fdd_chain times must be strictly increasing");
}

KernelDensity FddChain::initial() const {
    if (times_.front() == tau_) return single_atom({"x", "v"}, {chi_, 0.0}, "atom at (chi, 0)");
    return p_kernel(model_, times_.front() - tau_, {chi_, 0.0});
}

KernelDensity FddChain::factor(std::size_t i, StateXV from) const {
    if (i + 1 >= times_.size()) throw DomainError(kModule, "factor index out of range");
    return p_kernel(model_, times_[i + 1] - times_[i], from);
}

double FddChain::pair_density(std::size_t i, StateXV first, StateXV second) const {
    if (i + 1 >= times_.size()) throw DomainError(kModule, "pair index out of range");
    if (times_[i] == tau_) return 0.0;
    const double law_i = p_density(model_, times_[i] - tau_, {chi_, 0.0}, first);
    if (law_i == 0.0) return 0.0;
    return law_i * p_density(model_, times_[i + 1] - times_[i], first, second);
}

double FddChain::skip_density(std::size_t i, StateXV first, StateXV third, const CompositionOptions& options) const {
    if (i + 2 >= times_.size()) throw DomainError(kModule, "skip index out of range");
    if (times_[i] == tau_) return 0.0;
    const double law_i = p_density(model_, times_[i] - tau_, {chi_, 0.0}, first);
    if (law_i == 0.0) return 0.0;
    return law_i * compose_p_density(model_, times_[i + 1] - times_[i], times_[i + 2] - times_[i + 1], first, third,
                                     options);
}

double FddChain::no_renewal_probability(double rel_tol) const {
    if (times_.size() < 2) throw DomainError(kModule, "no_renewal_probability needs two times");
    if (times_[0] == tau_) return 0.0;
    const double delta = times_[1] - times_[0];
    const auto law = initial();
    const Law stable(model_.beta());
    // Integrate the law at t1 against the probability of no renewal over delta.
    std::vector<quad::NestedAxis> axes = law.axes;
    for (auto& a : axes) a.spec.rel_tol = rel_tol;
    // The v axis is axis 0 for both examples; the tail factor removes the
    // v^{-beta} singularity at v = 0.
    axes[0].spec.left_exponent.reset();
    const auto r = quad::integrate_nested_gaps(
        [&](const quad::NestedPoint& p) { return law.density(p) * stable.jump_tail(p.x[0], delta); }, axes);
    return r.value;
}

FddChain fdd_chain(const ModelSpec& model, double chi, double tau, std::vector<double> times) {
    return FddChain(model, chi, tau, std::move(times));
}

// ---------------------------------------------------------------------------
// moments

MomentResult grid_moment(const std::function<double(double)>& density, double lo, double hi, std::size_t cells,
                         int power, double truncation_threshold) {
    const auto& gl = quad::gauss_legendre(8);
    const auto edges = uniform_edges(lo, hi, cells);
    MomentResult out;
    for (std::size_t c = 0; c < cells; ++c) {
        const double a = edges[c], b = edges[c + 1];
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k];
            const double w = 0.5 * (b - a) * gl.weights[k] * density(x);
            out.mass += w;
            out.value += w * std::pow(x, power);
        }
    }
    out.truncated = 1.0 - out.mass > truncation_threshold;
    return out;
}

MomentResult grid_moment(const JointGrid& grid, int px, int py, double truncation_threshold) {
    MomentResult out;
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        const double xm = 0.5 * (grid.x_edges[i] + grid.x_edges[i + 1]);
        const double dm = grid.diagonal_cell_mass(i);
        out.mass += dm;
        out.value += dm * std::pow(xm, px + py);
        for (std::size_t j = 0; j < grid.ny(); ++j) {
            const double ym = 0.5 * (grid.y_edges[j] + grid.y_edges[j + 1]);
            const double m = grid.cell_mass(i, j);
            out.mass += m;
            out.value += m * std::pow(xm, px) * std::pow(ym, py);
        }
    }
    out.truncated = 1.0 - out.mass > truncation_threshold;
    return out;
}

} // namespace ctrw
