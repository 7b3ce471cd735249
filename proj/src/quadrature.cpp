#include "ctrw/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <string>

#include "ctrw/errors.hpp"

namespace ctrw::quad {

namespace {

// QUADPACK qk21 abscissae and weights. Gauss nodes are the odd entries.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
    0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
    0.148874338981631210884826001129720, 0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
    0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
    0.147739104901338491374841515972068, 0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                                       0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                                       0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();

// One sub-range of the integration interval, parametrised by z in (0,1).
struct Piece {
    enum class Kind { Linear, LeftPower, RightPower, Infinite };
    Kind kind = Kind::Linear;
    double a = 0.0;
    double b = 0.0;
    double power = 1.0;
    // Bounds of the whole interval (a piece may cover only half of it).
    double a_outer = 0.0;
    double b_outer = 0.0;
    // Infinite pieces: x = a + scale*w/(1-w), with either w = w_lo + (w_hi-w_lo)*z^power
    // (from_left) or 1-w = (1-w_lo)*... see map().
    double scale = 1.0;
    double w_span = 1.0;
    bool from_left = true;

    // Maps z in (0,1) to the abscissa, its distances to both ends of the
    // interval (accurate even where x itself rounds onto an endpoint) and the
    // Jacobian. Returns false when the node carries no weight.
    bool map(double z, Abscissa& p, double& jac) const {
        jac = 0.0;
        switch (kind) {
        case Kind::Linear:
            p.x = a + (b - a) * z;
            p.lo_gap = (b - a) * z;
            p.hi_gap = (b - a) * (1.0 - z);
            jac = b - a;
            break;
        case Kind::LeftPower: {
            const double zp = std::pow(z, power);
            p.x = a + (b - a) * zp;
            p.lo_gap = (b - a) * zp;
            p.hi_gap = (b - a) * -std::expm1(power * std::log(z));
            jac = (b - a) * power * zp / z;
            break;
        }
        case Kind::RightPower: {
            const double zp = std::pow(z, power);
            p.x = b - (b - a) * zp;
            p.hi_gap = (b - a) * zp;
            p.lo_gap = (b - a) * -std::expm1(power * std::log(z));
            jac = (b - a) * power * zp / z;
            break;
        }
        case Kind::Infinite: {
            double w, om, jw;
            const double zp = power == 1.0 ? z : std::pow(z, power);
            const double dzp = power == 1.0 ? 1.0 : power * zp / z;
            if (from_left) {
                w = w_span * zp;
                om = 1.0 - w;
                jw = w_span * dzp;
            } else {
                om = w_span * zp;
                w = 1.0 - om;
                jw = w_span * dzp;
            }
            if (om <= 0.0) return false;
            p.lo_gap = scale * (w / om);
            p.hi_gap = std::numeric_limits<double>::infinity();
            p.x = a + p.lo_gap;
            jac = scale * jw / (om * om);
            if (!std::isfinite(p.x) || !std::isfinite(jac) || !(p.lo_gap > 0.0)) return false;
            p.interior = p.x > a;
            return true;
        }
        }
        if (!(p.lo_gap > 0.0 && p.hi_gap > 0.0 && std::isfinite(jac) && jac > 0.0)) return false;
        p.lo_gap += a - a_outer;
        p.hi_gap += b_outer - b;
        p.interior = p.x > a_outer && p.x < b_outer;
        return true;
    }
};

std::vector<Piece> make_pieces(double a, double b, const QuadratureSpec& spec) {
    std::vector<Piece> pieces;
    const auto power_of = [](std::optional<double> alpha) { return alpha ? 1.0 / (1.0 + *alpha) : 1.0; };
    if (std::isinf(b)) {
        Piece base;
        base.kind = Piece::Kind::Infinite;
        base.a = a;
        base.scale = spec.scale;
        const bool left = spec.left_exponent.has_value();
        const bool tail = spec.tail_decay.has_value();
        if (!left && !tail) {
            pieces.push_back(base);
        } else if (left && !tail) {
            base.power = power_of(spec.left_exponent);
            pieces.push_back(base);
        } else if (!left && tail) {
            base.from_left = false;
            base.power = 1.0 / (*spec.tail_decay - 1.0);
            pieces.push_back(base);
        } else {
            Piece lo = base;
            lo.power = power_of(spec.left_exponent);
            lo.w_span = 0.5;
            Piece hi = base;
            hi.from_left = false;
            hi.power = 1.0 / (*spec.tail_decay - 1.0);
            hi.w_span = 0.5;
            pieces.push_back(lo);
            pieces.push_back(hi);
        }
        return pieces;
    }
    const bool left = spec.left_exponent.has_value();
    const bool right = spec.right_exponent.has_value();
    if (!left && !right) {
        pieces.push_back({Piece::Kind::Linear, a, b});
    } else if (left && !right) {
        pieces.push_back({Piece::Kind::LeftPower, a, b, power_of(spec.left_exponent)});
    } else if (!left && right) {
        pieces.push_back({Piece::Kind::RightPower, a, b, power_of(spec.right_exponent)});
    } else {
        const double m = 0.5 * (a + b);
        pieces.push_back({Piece::Kind::LeftPower, a, m, power_of(spec.left_exponent)});
        pieces.push_back({Piece::Kind::RightPower, m, b, power_of(spec.right_exponent)});
    }
    for (auto& piece : pieces) {
        piece.a_outer = a;
        piece.b_outer = b;
    }
    return pieces;
}

template <std::size_t N>
struct Segment {
    double lo;
    double hi;
    int piece;
    std::array<double, N> value;
    std::array<double, N> error;
};

template <std::size_t N>
struct ByError {
    bool operator()(const Segment<N>& l, const Segment<N>& r) const { return l.error[0] < r.error[0]; }
};

template <std::size_t N>
Segment<N> gk21(FunctionRef<std::array<double, N>(const Abscissa&)> f, const Piece& piece, int piece_index, double lo,
                double hi, long& evaluations) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::array<std::array<double, N>, 21> fv{};
    auto eval = [&](double z) {
        Abscissa p;
        double jac;
        std::array<double, N> out{};
        if (!piece.map(z, p, jac)) return out;
        const auto y = f(p);
        ++evaluations;
        for (std::size_t k = 0; k < N; ++k) {
            if (!std::isfinite(y[k])) throw EvaluationError("quadrature", p.x);
            out[k] = y[k] * jac;
        }
        return out;
    };
    fv[10] = eval(center);
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        fv[j] = eval(center - dx);
        fv[20 - j] = eval(center + dx);
    }
    Segment<N> seg{lo, hi, piece_index, {}, {}};
    for (std::size_t k = 0; k < N; ++k) {
        double resk = kWgk[10] * fv[10][k];
        double resg = 0.0;
        double resabs = std::abs(resk);
        for (int j = 0; j < 10; ++j) {
            const double s = fv[j][k] + fv[20 - j][k];
            resk += kWgk[j] * s;
            resabs += kWgk[j] * (std::abs(fv[j][k]) + std::abs(fv[20 - j][k]));
            if (j % 2 == 1) resg += kWg[j / 2] * s;
        }
        const double reskh = 0.5 * resk;
        double resasc = kWgk[10] * std::abs(fv[10][k] - reskh);
        for (int j = 0; j < 10; ++j)
            resasc += kWgk[j] * (std::abs(fv[j][k] - reskh) + std::abs(fv[20 - j][k] - reskh));
        resk *= half;
        resabs *= half;
        resasc *= half;
        double err = std::abs((resk - resg * half));
        if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
        if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) err = std::max(50.0 * kEps * resabs, err);
        seg.value[k] = resk;
        seg.error[k] = err;
    }
    return seg;
}

} // namespace

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0) && !(abs_tol > 0.0))
        throw ParameterError("quadrature", "rel_tol or abs_tol must be positive");
    if (rel_tol < 0.0 || abs_tol < 0.0) throw ParameterError("quadrature", "tolerances must be non-negative");
    if (max_subdivisions < 1) throw ParameterError("quadrature", "max_subdivisions must be positive");
    if (left_exponent && !(*left_exponent > -1.0))
        throw ParameterError("quadrature", "left exponent must exceed -1");
    if (right_exponent && !(*right_exponent > -1.0))
        throw ParameterError("quadrature", "right exponent must exceed -1");
    if (tail_decay && !(*tail_decay > 1.0)) throw ParameterError("quadrature", "tail decay must exceed 1");
    if (!(scale > 0.0)) throw ParameterError("quadrature", "scale must be positive");
}

namespace detail {

template <std::size_t N>
VectorResult<N> integrate_vector(FunctionRef<std::array<double, N>(const Abscissa&)> f, double a, double b,
                                 const QuadratureSpec& spec) {
    spec.validate();
    if (std::isnan(a) || std::isnan(b) || std::isinf(a))
        throw DomainError("quadrature", "bounds must be finite (upper bound may be +inf)");
    VectorResult<N> result;
    if (!(a < b)) {
        if (a == b) return result;
        throw DomainError("quadrature", "lower bound must not exceed upper bound");
    }
    if (std::isinf(b) && spec.right_exponent)
        throw ParameterError("quadrature", "right exponent is meaningless on an infinite range; use tail_decay");

    const auto pieces = make_pieces(a, b, spec);
    std::priority_queue<Segment<N>, std::vector<Segment<N>>, ByError<N>> heap;
    std::array<double, N> total{};
    std::array<double, N> total_err{};
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        auto seg = gk21<N>(f, pieces[p], static_cast<int>(p), 0.0, 1.0, result.evaluations);
        for (std::size_t k = 0; k < N; ++k) {
            total[k] += seg.value[k];
            total_err[k] += seg.error[k];
        }
        heap.push(seg);
    }

    int segments = static_cast<int>(pieces.size());
    bool converged = false;
    while (true) {
        const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(total[0]));
        if (total_err[0] <= tol) {
            converged = true;
            break;
        }
        if (segments >= spec.max_subdivisions) break;
        Segment<N> worst = heap.top();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) < 1e-3 * kEps * std::abs(mid) ||
            worst.error[0] == 0.0)
            break;
        heap.pop();
        const auto& piece = pieces[static_cast<std::size_t>(worst.piece)];
        auto left = gk21<N>(f, piece, worst.piece, worst.lo, mid, result.evaluations);
        auto right = gk21<N>(f, piece, worst.piece, mid, worst.hi, result.evaluations);
        for (std::size_t k = 0; k < N; ++k) {
            total[k] += left.value[k] + right.value[k] - worst.value[k];
            total_err[k] += left.error[k] + right.error[k] - worst.error[k];
        }
        heap.push(left);
        heap.push(right);
        ++segments;
    }

    // Re-sum in a fixed order to avoid drift from the running totals.
    std::vector<Segment<N>> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) {
        return l.piece != r.piece ? l.piece < r.piece : l.lo < r.lo;
    });
    result.value.fill(0.0);
    result.error.fill(0.0);
    for (const auto& s : all)
        for (std::size_t k = 0; k < N; ++k) {
            result.value[k] += s.value[k];
            result.error[k] += s.error[k];
        }
    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(result.value[0]));
    result.converged = converged || result.error[0] <= tol;
    return result;
}

template VectorResult<1> integrate_vector<1>(FunctionRef<std::array<double, 1>(const Abscissa&)>, double, double,
                                             const QuadratureSpec&);
template VectorResult<2> integrate_vector<2>(FunctionRef<std::array<double, 2>(const Abscissa&)>, double, double,
                                             const QuadratureSpec&);

} // namespace detail

QuadratureResult integrate_1d(FunctionRef<double(double)> f, double a, double b, const QuadratureSpec& spec) {
    auto wrapped = [&](const Abscissa& p) { return std::array<double, 1>{p.interior ? f(p.x) : 0.0}; };
    const auto r = detail::integrate_vector<1>(wrapped, a, b, spec);
    return {r.value[0], r.error[0], r.evaluations, r.converged};
}

QuadratureResult integrate_1d_gaps(FunctionRef<double(const Abscissa&)> f, double a, double b,
                                   const QuadratureSpec& spec) {
    auto wrapped = [&](const Abscissa& p) { return std::array<double, 1>{f(p)}; };
    const auto r = detail::integrate_vector<1>(wrapped, a, b, spec);
    return {r.value[0], r.error[0], r.evaluations, r.converged};
}

double integrate_or_throw(FunctionRef<double(double)> f, double a, double b, const QuadratureSpec& spec,
                          const char* module) {
    const auto r = integrate_1d(f, a, b, spec);
    if (!r.converged)
        throw IntegrationError(module, "quadrature did not converge (estimate " + std::to_string(r.error_estimate) + ")",
                               r.value, r.error_estimate);
    return r.value;
}

namespace {

struct NestedState {
    FunctionRef<double(const NestedPoint&)> f;
    std::span<const NestedAxis> axes;
    std::array<double, 3> point{};
    std::array<double, 3> lo_gap{};
    std::array<double, 3> hi_gap{};
    long evaluations = 0;
    bool converged = true;
};

std::array<double, 2> nested_level(NestedState& state, std::size_t level) {
    const auto& axis = state.axes[level];
    const std::span<const double> outer(state.point.data(), level);
    const AxisRange range = axis.bounds(outer);
    if (!(range.lo < range.hi)) return {0.0, 0.0};
    QuadratureSpec spec = axis.spec;
    if (range.scale > 0.0) spec.scale = range.scale;
    const bool innermost = level + 1 == state.axes.size();
    auto integrand = [&](const Abscissa& p) -> std::array<double, 2> {
        state.point[level] = p.x;
        state.lo_gap[level] = p.lo_gap;
        state.hi_gap[level] = p.hi_gap;
        if (innermost) {
            ++state.evaluations;
            const std::size_t n = state.axes.size();
            return {state.f(NestedPoint{std::span<const double>(state.point.data(), n),
                                        std::span<const double>(state.lo_gap.data(), n),
                                        std::span<const double>(state.hi_gap.data(), n)}),
                    0.0};
        }
        return nested_level(state, level + 1);
    };
    const auto r = detail::integrate_vector<2>(integrand, range.lo, range.hi, spec);
    if (!r.converged) state.converged = false;
    return {r.value[0], r.error[0] + std::abs(r.value[1])};
}

} // namespace

QuadratureResult integrate_nested(FunctionRef<double(std::span<const double>)> f, std::span<const NestedAxis> axes) {
    auto wrapped = [&](const NestedPoint& p) { return f(p.x); };
    return integrate_nested_gaps(wrapped, axes);
}

QuadratureResult integrate_nested_gaps(FunctionRef<double(const NestedPoint&)> f, std::span<const NestedAxis> axes) {
    if (axes.empty() || axes.size() > 3) throw ParameterError("quadrature", "nested integration supports 1 to 3 axes");
    NestedState state{f, axes};
    const auto r = nested_level(state, 0);
    return {r[0], r[1], state.evaluations, state.converged};
}

const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, GaussLegendre> cache;
    if (n < 1 || n > 64) throw ParameterError("quadrature", "Gauss-Legendre order must be in [1,64]");
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussLegendre rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    // Newton iteration on P_n from the Chebyshev initial guess.
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

} // namespace ctrw::quad
