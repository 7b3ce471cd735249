#include "ctrw/stable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"

namespace ctrw {

namespace {

constexpr const char* kModule = "stable_core";
constexpr double kPi = std::numbers::pi;
// log of the smallest normal double; anything below is reported as underflow.
const double kLogMin = std::log(std::numeric_limits<double>::min());

void check_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ParameterError(kModule, "beta must lie in (0,1), got " + std::to_string(beta));
}

double scaled_argument(double beta, double t, double u) { return t * std::pow(u, -1.0 / beta); }

// Terms of the convergent series, sign and sin factor included:
//   pdf:      (1/pi) (-1)^{k+1} Gamma(k beta + 1)/k! sin(k pi beta)
//   survival: (1/pi) (-1)^{k+1} Gamma(k beta)/k!     sin(k pi beta)
// Stored as (log magnitude of the Gamma ratio, signed sine factor) so that
// large k cannot overflow.
struct SeriesTerm {
    double log_mag;
    double sign_sin;
};

std::vector<SeriesTerm> series_terms(double beta, int terms, bool survival) {
    std::vector<SeriesTerm> out;
    out.reserve(static_cast<std::size_t>(terms));
    for (int k = 1; k <= terms; ++k) {
        const double kb = k * beta;
        const double lg = (survival ? std::lgamma(kb) : std::lgamma(kb + 1.0)) - std::lgamma(k + 1.0);
        const double s = ((k % 2 == 1) ? 1.0 : -1.0) * std::sin(kPi * std::fmod(kb, 2.0)) / kPi;
        out.push_back({lg, s});
    }
    return out;
}

// sum_k term_k * x^{-k beta}; stops once the magnitudes (sine ignored) are
// negligible against the running sum.
double sum_series(const std::vector<SeriesTerm>& terms, double beta, double x) {
    const double log_x = std::log(x);
    double sum = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        const double mag = std::exp(terms[i].log_mag - k * beta * log_x);
        sum += terms[i].sign_sin * mag;
        max_abs = std::max(max_abs, std::abs(terms[i].sign_sin * mag));
        if (i > 2 && mag < 1e-18 * std::abs(sum)) break;
    }
    if (max_abs > 1e8 * std::abs(sum)) {
        // Catastrophic cancellation: the argument is too small for the series.
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sum;
}

double direct_survival1(double beta, double x, double tol);

} // namespace

namespace stable_detail {

double kanter_log_a(double beta, double phi) {
    const double ob = 1.0 - beta;
    return (beta / ob) * std::log(std::sin(beta * phi)) + std::log(std::sin(ob * phi)) -
           std::log(std::sin(phi)) / ob;
}

double series_threshold(double beta) { return std::pow(8.0, 1.0 / beta); }

double zolotarev_log_pdf1(double beta, double x, double tol) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    const double ob = 1.0 - beta;
    const double kappa = beta / ob;
    const double a0 = std::pow(beta, kappa) * ob;
    const double log_x = std::log(x);
    const double z = std::exp(-kappa * log_x);
    const double log_front = std::log(kappa / kPi) - log_x / ob - a0 * z;
    if (log_front + 5.0 < kLogMin - 50.0) return -std::numeric_limits<double>::infinity();
    auto integrand = [&](double phi) {
        const double log_a = kanter_log_a(beta, phi);
        if (log_a > 700.0) return 0.0;
        const double a = std::exp(log_a);
        return std::exp(log_a - (a - a0) * z);
    };
    quad::QuadratureSpec spec;
    spec.rel_tol = tol;
    spec.max_subdivisions = 2000;
    const auto r = quad::integrate_1d(integrand, 0.0, kPi, spec);
    if (!(r.value > 0.0)) return -std::numeric_limits<double>::infinity();
    return log_front + std::log(r.value);
}

double series_pdf1(double beta, double x, int terms) {
    if (!(x > 0.0)) return 0.0;
    return sum_series(series_terms(beta, terms, false), beta, x) / x;
}

double series_survival1(double beta, double x, int terms) {
    if (!(x > 0.0)) return 1.0;
    return sum_series(series_terms(beta, terms, true), beta, x);
}

double saddle_pdf1(double beta, double x) {
    if (!(x > 0.0)) return 0.0;
    const double ob = 1.0 - beta;
    const double kappa = beta / ob;
    const double r = x / beta;
    const double lg = -0.5 * std::log(2.0 * kPi * ob * beta) - (2.0 - beta) / (2.0 * ob) * std::log(r) -
                      ob * std::pow(r, -kappa);
    return std::exp(lg);
}

double kanter_log_cdf1(double beta, double x, double tol) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    const double ob = 1.0 - beta;
    const double kappa = beta / ob;
    const double a0 = std::pow(beta, kappa) * ob;
    const double z = std::pow(x, -kappa);
    auto integrand = [&](double phi) {
        const double log_a = kanter_log_a(beta, phi);
        if (log_a > 700.0) return 0.0;
        return std::exp(-(std::exp(log_a) - a0) * z);
    };
    quad::QuadratureSpec spec;
    spec.rel_tol = tol;
    spec.max_subdivisions = 2000;
    const auto r = quad::integrate_1d(integrand, 0.0, kPi, spec);
    if (!(r.value > 0.0)) return -std::numeric_limits<double>::infinity();
    return -a0 * z + std::log(r.value / kPi);
}

double kanter_survival1(double beta, double x, double tol) {
    if (!(x > 0.0)) return 1.0;
    const double z = std::pow(x, -beta / (1.0 - beta));
    auto integrand = [&](double phi) {
        const double log_a = kanter_log_a(beta, phi);
        if (log_a > 700.0) return 1.0;
        return -std::expm1(-std::exp(log_a) * z);
    };
    quad::QuadratureSpec spec;
    spec.rel_tol = tol;
    spec.max_subdivisions = 2000;
    return quad::integrate_1d(integrand, 0.0, kPi, spec).value / kPi;
}

} // namespace stable_detail

StableParams::StableParams(double beta, PdfMethod method, int series_terms, double integral_tol)
    : beta_(beta), method_(method), series_terms_(series_terms), integral_tol_(integral_tol) {
    check_beta(beta);
    if (series_terms < 1) throw ParameterError(kModule, "series_terms must be positive");
    if (!(integral_tol > 0.0 && integral_tol < 1.0)) throw ParameterError(kModule, "integral_tol must lie in (0,1)");
}

StablePdfValue stable_pdf_detailed(const StableParams& params, double t, double u) {
    if (!(u > 0.0) || !std::isfinite(u)) throw DomainError(kModule, "operational time u must be positive");
    if (std::isnan(t)) throw DomainError(kModule, "t is NaN");
    StablePdfValue out;
    out.method = params.pdf_method();
    if (!(t > 0.0) || std::isinf(t)) return out;
    const double beta = params.beta();
    const double x = scaled_argument(beta, t, u);
    const double jac = std::pow(u, -1.0 / beta);

    PdfMethod method = params.pdf_method();
    if (method == PdfMethod::Auto)
        method = x >= stable_detail::series_threshold(beta) ? PdfMethod::SeriesSmallArg : PdfMethod::ZolotarevIntegral;
    out.method = method;

    double value = 0.0;
    switch (method) {
    case PdfMethod::ZolotarevIntegral: {
        const double lg = stable_detail::zolotarev_log_pdf1(beta, x, params.integral_tol());
        const double total = lg + std::log(jac);
        if (total < kLogMin) {
            out.underflow = true;
            return out;
        }
        value = std::exp(total);
        break;
    }
    case PdfMethod::SeriesSmallArg:
        value = stable_detail::series_pdf1(beta, x, params.series_terms()) * jac;
        if (std::isnan(value))
            throw DomainError(kModule, "series does not converge numerically at x = " + std::to_string(x));
        break;
    case PdfMethod::SeriesLargeArg:
        value = stable_detail::saddle_pdf1(beta, x) * jac;
        break;
    case PdfMethod::Auto:
        break;
    }
    if (value != 0.0 && std::abs(value) < std::numeric_limits<double>::min()) {
        out.underflow = true;
        value = 0.0;
    }
    if (value == 0.0 && method != PdfMethod::SeriesSmallArg) out.underflow = true;
    out.value = value;
    return out;
}

double stable_pdf(const StableParams& params, double t, double u) { return stable_pdf_detailed(params, t, u).value; }

namespace {

double direct_survival1(double beta, double x, double tol) {
    const StableParams p(beta, PdfMethod::Auto, 400, std::min(1e-12, tol * 1e-2));
    auto g = [&](double s) { return stable_pdf(p, s, 1.0); };
    quad::QuadratureSpec spec;
    spec.rel_tol = tol;
    spec.max_subdivisions = 2000;
    spec.with_tail(1.0 + beta).with_scale(std::max(x, 1e-300));
    return quad::integrate_1d(g, x, quad::kInfinity, spec).value;
}

double direct_cdf1(double beta, double x, double tol) {
    if (!(x > 0.0)) return 0.0;
    if (x > 1.0) return 1.0 - direct_survival1(beta, x, tol);
    const StableParams p(beta, PdfMethod::Auto, 400, std::min(1e-12, tol * 1e-2));
    auto g = [&](double s) { return stable_pdf(p, s, 1.0); };
    quad::QuadratureSpec spec;
    spec.rel_tol = tol;
    spec.max_subdivisions = 2000;
    return quad::integrate_1d(g, 0.0, x, spec).value;
}

} // namespace

double stable_cdf(const StableParams& params, double t, double u) {
    if (!(u > 0.0) || !std::isfinite(u)) throw DomainError(kModule, "operational time u must be positive");
    if (std::isnan(t)) throw DomainError(kModule, "t is NaN");
    if (!(t > 0.0)) return 0.0;
    if (std::isinf(t)) return 1.0;
    return direct_cdf1(params.beta(), scaled_argument(params.beta(), t, u), 1e-10);
}

double stable_sample(const StableParams& params, double u, RngStream& rng) {
    if (!(u >= 0.0) || !std::isfinite(u)) throw DomainError(kModule, "operational time u must be non-negative");
    if (u == 0.0) return 0.0;
    const double beta = params.beta();
    const double phi = kPi * rng.uniform();
    const double e = rng.exponential();
    const double log_d = (1.0 - beta) / beta * (stable_detail::kanter_log_a(beta, phi) - std::log(e));
    return std::pow(u, 1.0 / beta) * std::exp(log_d);
}

double stable_laplace(const StableParams& params, double u, double s) {
    if (!(u >= 0.0)) throw DomainError(kModule, "operational time u must be non-negative");
    if (!(s >= 0.0)) throw DomainError(kModule, "Laplace variable s must be non-negative");
    return std::exp(-u * std::pow(s, params.beta()));
}

double inverse_stable_pdf(const StableParams& params, double t, double x) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(kModule, "clock time t must be positive");
    if (std::isnan(x)) throw DomainError(kModule, "x is NaN");
    if (!(x > 0.0) || std::isinf(x)) return 0.0;
    const double beta = params.beta();
    // g(t, x) differentiated through D_x: (t/beta) x^{-1-1/beta} g1(t x^{-1/beta})
    return t / (beta * x) * stable_pdf(params, t, x);
}

double inverse_stable_cdf(const StableParams& params, double t, double x) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(kModule, "clock time t must be positive");
    if (std::isnan(x)) throw DomainError(kModule, "x is NaN");
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double beta = params.beta();
    const double arg = scaled_argument(beta, t, x);
    if (arg > 1.0) return direct_survival1(beta, arg, 1e-10);
    return 1.0 - direct_cdf1(beta, arg, 1e-10);
}

// ---------------------------------------------------------------------------

ChebyshevTable ChebyshevTable::build(const std::function<double(double)>& f, double y_lo, double y_hi,
                                     double initial_width, double abs_tol) {
    constexpr int n = kDegree;
    ChebyshevTable table;
    table.lo_ = y_lo;
    table.hi_ = y_hi;

    auto fit = [&](double a, double b) {
        Piece piece{a, b, std::vector<double>(n)};
        std::array<double, n> values{};
        for (int j = 0; j < n; ++j) {
            const double s = std::cos(kPi * (j + 0.5) / n);
            values[static_cast<std::size_t>(j)] = f(0.5 * (a + b) + 0.5 * (b - a) * s);
        }
        for (int k = 0; k < n; ++k) {
            double c = 0.0;
            for (int j = 0; j < n; ++j) c += values[static_cast<std::size_t>(j)] * std::cos(kPi * k * (j + 0.5) / n);
            piece.coef[static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : 2.0) * c / n;
        }
        return piece;
    };
    auto eval = [](const Piece& p, double y) {
        const double s = (2.0 * y - p.lo - p.hi) / (p.hi - p.lo);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = p.coef.size(); k-- > 1;) {
            const double b0 = 2.0 * s * b1 - b2 + p.coef[k];
            b2 = b1;
            b1 = b0;
        }
        return s * b1 - b2 + p.coef[0];
    };

    // Depth-first so pieces come out ordered.
    struct Pending {
        double a, b;
    };
    const int initial = std::max(1, static_cast<int>(std::ceil((y_hi - y_lo) / initial_width)));
    std::vector<Pending> stack;
    for (int i = initial; i-- > 0;)
        stack.push_back({y_lo + (y_hi - y_lo) * i / initial, i + 1 == initial ? y_hi : y_lo + (y_hi - y_lo) * (i + 1) / initial});
    while (!stack.empty()) {
        const Pending cur = stack.back();
        stack.pop_back();
        Piece piece = fit(cur.a, cur.b);
        double worst = 0.0;
        for (double frac : {0.07, 0.31, 0.5, 0.77, 0.96}) {
            const double y = cur.a + frac * (cur.b - cur.a);
            const double exact = f(y);
            const double err = std::abs(eval(piece, y) - exact) / (abs_tol * (1.0 + 1e-2 * std::abs(exact)));
            worst = std::max(worst, err);
        }
        if (worst > 1.0 && cur.b - cur.a > 1e-3) {
            const double mid = 0.5 * (cur.a + cur.b);
            stack.push_back({mid, cur.b});
            stack.push_back({cur.a, mid});
            continue;
        }
        table.max_fit_error_ = std::max(table.max_fit_error_, worst * abs_tol);
        table.pieces_.push_back(std::move(piece));
    }
    return table;
}

double ChebyshevTable::operator()(double y) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), y, [](double v, const Piece& p) { return v < p.lo; });
    const Piece& p = it == pieces_.begin() ? pieces_.front() : *std::prev(it);
    const double s = (2.0 * y - p.lo - p.hi) / (p.hi - p.lo);
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = p.coef.size(); k-- > 1;) {
        const double b0 = 2.0 * s * b1 - b2 + p.coef[k];
        b2 = b1;
        b1 = b0;
    }
    return s * b1 - b2 + p.coef[0];
}

// ---------------------------------------------------------------------------

StableDistribution::StableDistribution(double beta)
    : beta_(beta), inv_beta_(1.0 / beta), sample_exponent_((1.0 - beta) / beta) {
    check_beta(beta);
    const double ob = 1.0 - beta;
    const double kappa = beta / ob;
    // Below x_lo the density is below exp(-690) and treated as zero.
    const double x_lo = beta * std::pow(690.0 / ob, -1.0 / kappa);
    const double x_hi = stable_detail::series_threshold(beta);
    const double y_lo = std::log(x_lo);
    const double y_hi = std::log(x_hi);
    log_pdf_ = ChebyshevTable::build(
        [beta](double y) { return stable_detail::zolotarev_log_pdf1(beta, std::exp(y), 2e-13); }, y_lo, y_hi, 0.5,
        1e-12);
    log_cdf_ = ChebyshevTable::build(
        [beta](double y) { return stable_detail::kanter_log_cdf1(beta, std::exp(y), 2e-13); }, y_lo, y_hi, 0.5,
        1e-12);
    for (const auto& term : series_terms(beta, 400, false)) series_coef_.push_back(term.sign_sin * std::exp(term.log_mag));
    for (const auto& term : series_terms(beta, 400, true)) survival_coef_.push_back(term.sign_sin * std::exp(term.log_mag));
}

std::shared_ptr<const StableDistribution> StableDistribution::get(double beta) {
    check_beta(beta);
    static std::mutex mutex;
    static std::map<double, std::shared_ptr<const StableDistribution>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(beta);
    if (it != cache.end()) return it->second;
    auto dist = std::make_shared<const StableDistribution>(beta);
    cache.emplace(beta, dist);
    return dist;
}

namespace {

// sum_k coef_k w^k with w = x^{-beta} small (x above the series threshold).
double power_series(const std::vector<double>& coef, double w) {
    double sum = 0.0;
    double wk = w;
    for (double c : coef) {
        const double term = c * wk;
        sum += term;
        if (std::abs(wk) < 1e-18 * std::abs(sum)) break;
        wk *= w;
    }
    return sum;
}

} // namespace

double StableDistribution::pdf1(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double y = std::log(x);
    if (y < log_pdf_.lo()) return 0.0;
    if (y >= log_pdf_.hi()) return power_series(series_coef_, std::pow(x, -beta_)) / x;
    return std::exp(log_pdf_(y));
}

double StableDistribution::cdf1(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double y = std::log(x);
    if (y < log_cdf_.lo()) return 0.0;
    if (y >= log_cdf_.hi()) return 1.0 - power_series(survival_coef_, std::pow(x, -beta_));
    return std::exp(log_cdf_(y));
}

double StableDistribution::survival1(double x) const {
    if (!(x > 0.0)) return 1.0;
    const double y = std::log(x);
    if (y < log_cdf_.lo()) return 1.0;
    if (y >= log_cdf_.hi()) return power_series(survival_coef_, std::pow(x, -beta_));
    return -std::expm1(log_cdf_(y));
}

double StableDistribution::pdf(double t, double u) const {
    if (!(u > 0.0)) throw DomainError(kModule, "operational time u must be positive");
    const double scale = std::pow(u, -inv_beta_);
    return scale * pdf1(t * scale);
}

double StableDistribution::cdf(double t, double u) const {
    if (!(u > 0.0)) throw DomainError(kModule, "operational time u must be positive");
    return cdf1(t * std::pow(u, -inv_beta_));
}

double StableDistribution::inverse_pdf(double t, double x) const {
    if (!(x > 0.0) || std::isinf(x)) return 0.0;
    const double scale = std::pow(x, -inv_beta_);
    return t * inv_beta_ / x * scale * pdf1(t * scale);
}

double StableDistribution::inverse_cdf(double t, double x) const {
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    return survival1(t * std::pow(x, -inv_beta_));
}

double StableDistribution::sample1(RngStream& rng) const {
    const double phi = kPi * rng.uniform();
    const double e = rng.exponential();
    // (A(phi)/e)^{(1-beta)/beta} with the logarithms of A's factors collected.
    const double ob = 1.0 - beta_;
    return std::sin(beta_ * phi) *
           std::exp(sample_exponent_ * std::log(std::sin(ob * phi) / e) - inv_beta_ * std::log(std::sin(phi)));
}

double StableDistribution::sample(double u, RngStream& rng) const { return std::pow(u, inv_beta_) * sample1(rng); }

} // namespace ctrw
