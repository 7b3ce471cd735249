#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ctrw/rng.hpp"

namespace ctrw {

// How g(t,u), the density of the standard beta-stable subordinator, is
// evaluated. With x = t u^{-1/beta} the series argument is w = x^{-beta} =
// u t^{-beta}.
//
//   ZolotarevIntegral  single integral over (0,pi); uniformly accurate.
//   SeriesSmallArg     the power series in w; convergent for every w but only
//                      numerically useful for small w.
//   SeriesLargeArg     leading saddle-point term of the w -> infinity
//                      expansion (asymptotic; exact at beta = 1/2).
//   Auto               series for w <= 1/8, Zolotarev elsewhere.
enum class PdfMethod { SeriesLargeArg, SeriesSmallArg, ZolotarevIntegral, Auto };

class StableParams {
public:
    explicit StableParams(double beta, PdfMethod method = PdfMethod::Auto, int series_terms = 400,
                          double integral_tol = 1e-12);

    double beta() const noexcept { return beta_; }
    PdfMethod pdf_method() const noexcept { return method_; }
    int series_terms() const noexcept { return series_terms_; }
    double integral_tol() const noexcept { return integral_tol_; }

    StableParams with_method(PdfMethod m) const { return StableParams(beta_, m, series_terms_, integral_tol_); }

private:
    double beta_;
    PdfMethod method_;
    int series_terms_;
    double integral_tol_;
};

struct StablePdfValue {
    double value = 0.0;
    /// True when the density is below the smallest normal double and was
    /// reported as zero.
    bool underflow = false;
    PdfMethod method = PdfMethod::Auto;
};

/// g(t,u): density in t of the subordinator at operational time u > 0.
double stable_pdf(const StableParams& params, double t, double u);
StablePdfValue stable_pdf_detailed(const StableParams& params, double t, double u);

/// P(D_u <= t), by adaptive quadrature of stable_pdf.
double stable_cdf(const StableParams& params, double t, double u);

/// One draw of D_u (Kanter's representation).
double stable_sample(const StableParams& params, double u, RngStream& rng);

/// E[exp(-s D_u)] = exp(-u s^beta).
double stable_laplace(const StableParams& params, double u, double s);

/// Density in x of the inverse subordinator E_t (first passage over t).
double inverse_stable_pdf(const StableParams& params, double t, double x);

/// P(E_t <= x) = P(D_x >= t).
double inverse_stable_cdf(const StableParams& params, double t, double x);

// Piecewise-Chebyshev table of y -> f(e^y) on [y_lo, y_hi].
class ChebyshevTable {
public:
    static constexpr int kDegree = 20;

    struct Piece {
        double lo;
        double hi;
        std::vector<double> coef;
    };

    static ChebyshevTable build(const std::function<double(double)>& f, double y_lo, double y_hi,
                                double initial_width, double abs_tol);

    double operator()(double y) const;
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t pieces() const noexcept { return pieces_.size(); }
    double max_fit_error() const noexcept { return max_fit_error_; }

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
    double max_fit_error_ = 0.0;
    std::vector<Piece> pieces_;
};

// Tabulated g(.,1) and its distribution function for one beta. Building a
// table costs a few thousand direct evaluations; afterwards pdf/cdf calls
// are a table lookup. Used by every kernel and simulator routine; the
// direct functions above stay the reference.
class StableDistribution {
public:
    explicit StableDistribution(double beta);

    /// Shared, lazily built instance per beta (thread-safe).
    static std::shared_ptr<const StableDistribution> get(double beta);

    double beta() const noexcept { return beta_; }

    double pdf1(double x) const;
    double cdf1(double x) const;
    double survival1(double x) const;

    double pdf(double t, double u) const;
    double cdf(double t, double u) const;

    double inverse_pdf(double t, double x) const;
    double inverse_cdf(double t, double x) const;

    double sample1(RngStream& rng) const;
    double sample(double u, RngStream& rng) const;

    const ChebyshevTable& log_pdf_table() const noexcept { return log_pdf_; }
    const ChebyshevTable& log_cdf_table() const noexcept { return log_cdf_; }

private:
    double beta_;
    double inv_beta_;
    double sample_exponent_;
    ChebyshevTable log_pdf_;
    ChebyshevTable log_cdf_;
    std::vector<double> series_coef_;
    std::vector<double> survival_coef_;
};

namespace stable_detail {

// Building blocks exposed for testing; all at u = 1.
double zolotarev_log_pdf1(double beta, double x, double tol);
double series_pdf1(double beta, double x, int terms);
double series_survival1(double beta, double x, int terms);
double saddle_pdf1(double beta, double x);
double kanter_log_cdf1(double beta, double x, double tol);
double kanter_survival1(double beta, double x, double tol);
/// log A(phi) of Kanter's representation.
double kanter_log_a(double beta, double phi);
/// Threshold above which Auto uses the convergent series.
double series_threshold(double beta);

} // namespace stable_detail

} // namespace ctrw
