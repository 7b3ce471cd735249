#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "catch_amalgamated.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"
#include "ctrw/stable.hpp"

using namespace ctrw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Levy density: the beta = 1/2 subordinator in closed form.
double levy_half(double t, double u) {
    return u * std::pow(t, -1.5) / (2.0 * std::sqrt(std::numbers::pi)) * std::exp(-u * u / (4.0 * t));
}

} // namespace

TEST_CASE("beta outside (0,1) is rejected") {
    for (double b : {0.0, 1.0, -0.2, 1.5, std::nan("")}) CHECK_THROWS_AS(StableParams(b), ParameterError);
    CHECK_THROWS_AS(StableDistribution::get(1.0), ParameterError);
}

TEST_CASE("beta = 1/2 matches the closed form for every method") {
    const StableParams p(0.5);
    for (double t : {0.01, 0.05, 0.2, 1.0, 3.0, 10.0, 100.0, 1e4}) {
        for (double u : {0.5, 1.0, 2.0}) {
            const double exact = levy_half(t, u);
            CHECK_THAT(stable_pdf(p.with_method(PdfMethod::ZolotarevIntegral), t, u), WithinRel(exact, 1e-10));
            CHECK_THAT(stable_pdf(p.with_method(PdfMethod::SeriesLargeArg), t, u), WithinRel(exact, 1e-12));
            CHECK_THAT(stable_pdf(p, t, u), WithinRel(exact, 1e-10));
        }
    }
    for (double t : {20.0, 100.0, 1e4})
        CHECK_THAT(stable_pdf(p.with_method(PdfMethod::SeriesSmallArg), t, 1.0), WithinRel(levy_half(t, 1.0), 1e-12));
}

TEST_CASE("beta = 1/2 distribution function is erfc(1/(2 sqrt t))") {
    const StableParams p(0.5);
    CHECK_THAT(stable_cdf(p, 1.0, 1.0), WithinAbs(0.4795001221869535, 1e-9));
    for (double t : {0.05, 0.3, 2.0, 40.0}) CHECK_THAT(stable_cdf(p, t, 1.0), WithinAbs(std::erfc(0.5 / std::sqrt(t)), 1e-9));
}

TEST_CASE("tiny densities underflow to zero with a flag") {
    const StableParams p(0.5);
    const auto v = stable_pdf_detailed(p, 1e-6, 1.0);
    CHECK(v.value == 0.0);
    CHECK(v.underflow);
    CHECK(stable_pdf(p, 0.0, 1.0) == 0.0);
    CHECK(stable_pdf(p, -1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(stable_pdf(p, 1.0, 0.0), DomainError);
}

TEST_CASE("density integrates to one and has the stable Laplace transform") {
    for (double beta : {0.2, 0.5, 0.8}) {
        const StableParams p(beta);
        auto g = [&](double t) { return stable_pdf(p, t, 1.0); };
        quad::QuadratureSpec spec{.rel_tol = 1e-10, .max_subdivisions = 2000};
        spec.with_tail(1.0 + beta);
        CHECK_THAT(quad::integrate_1d(g, 0.0, quad::kInfinity, spec).value, WithinAbs(1.0, 1e-8));
        for (double s : {0.5, 1.0, 3.0}) {
            quad::QuadratureSpec ls{.rel_tol = 1e-10, .max_subdivisions = 2000};
            const double lt =
                quad::integrate_1d([&](double t) { return std::exp(-s * t) * g(t); }, 0.0, quad::kInfinity, ls).value;
            CHECK_THAT(lt, WithinRel(std::exp(-std::pow(s, beta)), 1e-8));
            CHECK_THAT(stable_laplace(p, 1.0, s), WithinRel(std::exp(-std::pow(s, beta)), 1e-15));
        }
    }
}

TEST_CASE("Zolotarev integral and convergent series agree where both apply") {
    for (double beta : {0.15, 0.3, 0.6, 0.85}) {
        const StableParams p(beta);
        const double x0 = std::pow(3.0, 1.0 / beta);
        for (double x : {x0, 3.0 * x0, 30.0 * x0}) {
            const double z = stable_pdf(p.with_method(PdfMethod::ZolotarevIntegral), x, 1.0);
            const double s = stable_pdf(p.with_method(PdfMethod::SeriesSmallArg), x, 1.0);
            CHECK_THAT(z, WithinRel(s, 1e-9));
        }
    }
}

TEST_CASE("saddle-point term is the t -> 0 limit") {
    for (double beta : {0.3, 0.7}) {
        const StableParams p(beta);
        double prev = 1.0;
        for (double x : {0.3, 0.1, 0.03}) {
            const double exact = stable_pdf(p.with_method(PdfMethod::ZolotarevIntegral), x, 1.0);
            if (exact == 0.0) break;
            const double ratio = stable_pdf(p.with_method(PdfMethod::SeriesLargeArg), x, 1.0) / exact;
            CHECK(std::abs(ratio - 1.0) <= prev);
            prev = std::abs(ratio - 1.0);
        }
        CHECK(prev < 0.05);
    }
}

TEST_CASE("tabulated density matches the direct evaluation") {
    for (double beta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto dist = StableDistribution::get(beta);
        const StableParams p(beta);
        INFO("beta = " << beta);
        const double lo = std::exp(dist->log_pdf_table().lo());
        const double hi = std::exp(dist->log_pdf_table().hi());
        for (int i = 0; i <= 60; ++i) {
            const double x = lo * std::pow(hi * 20.0 / lo, i / 60.0) * 1.0137;
            const double direct = stable_pdf(p, x, 1.0);
            if (direct < 1e-280) continue;
            CHECK_THAT(dist->pdf1(x), WithinRel(direct, 1e-10));
        }
        CHECK(dist->log_pdf_table().max_fit_error() < 1e-10);
        CHECK_THAT(dist->pdf(2.0, 1.5), WithinRel(stable_pdf(p, 2.0, 1.5), 1e-10));
    }
}

TEST_CASE("tabulated distribution function matches quadrature of the density") {
    for (double beta : {0.2, 0.5, 0.8}) {
        const auto dist = StableDistribution::get(beta);
        const StableParams p(beta);
        for (double x : {0.3, 0.9, 1.0, 2.5, 10.0, 1e3, 1e6}) {
            const double direct = stable_cdf(p, x, 1.0);
            CHECK_THAT(dist->cdf1(x), WithinAbs(direct, 1e-9));
            CHECK_THAT(dist->survival1(x), WithinAbs(1.0 - direct, 1e-9));
        }
        CHECK_THAT(StableDistribution::get(0.5)->cdf1(1.0), WithinAbs(0.4795001221869535, 1e-11));
    }
}

TEST_CASE("Kanter sampler reproduces the distribution") {
    for (double beta : {0.3, 0.5, 0.8}) {
        const auto dist = StableDistribution::get(beta);
        const StableParams p(beta);
        RngStream rng(20240601, static_cast<std::uint64_t>(beta * 100));
        const int n = 40000;
        std::vector<double> xs(n);
        double lt = 0.0;
        for (auto& x : xs) {
            x = stable_sample(p, 1.0, rng);
            lt += std::exp(-x);
        }
        std::sort(xs.begin(), xs.end());
        double ks = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = dist->cdf1(xs[static_cast<std::size_t>(i)]);
            ks = std::max({ks, std::abs(f - (i + 1.0) / n), std::abs(f - static_cast<double>(i) / n)});
        }
        // Kolmogorov 0.999 quantile is 1.95/sqrt(n).
        CHECK(ks < 1.95 / std::sqrt(n));
        // E exp(-D_1) = e^{-1}; the summand has variance below 1/4.
        CHECK(std::abs(lt / n - std::exp(-1.0)) < 5.0 * 0.5 / std::sqrt(n));
    }
}

TEST_CASE("sampler scales with operational time") {
    const StableParams p(0.6);
    RngStream a(7, 1), b(7, 1);
    for (int i = 0; i < 10; ++i) CHECK_THAT(stable_sample(p, 3.0, a), WithinRel(std::pow(3.0, 1.0 / 0.6) * stable_sample(p, 1.0, b), 1e-14));
    CHECK(stable_sample(p, 0.0, a) == 0.0);
}

TEST_CASE("inverse stable density: normalisation, mean and distribution function") {
    for (double beta : {0.3, 0.5, 0.7}) {
        const StableParams p(beta);
        const auto dist = StableDistribution::get(beta);
        for (double t : {0.5, 2.0}) {
            auto h = [&](double x) { return inverse_stable_pdf(p, t, x); };
            quad::QuadratureSpec spec{.rel_tol = 1e-10, .max_subdivisions = 2000};
            CHECK_THAT(quad::integrate_1d(h, 0.0, quad::kInfinity, spec).value, WithinAbs(1.0, 1e-8));
            const double mean =
                quad::integrate_1d([&](double x) { return x * h(x); }, 0.0, quad::kInfinity, spec).value;
            CHECK_THAT(mean, WithinRel(std::pow(t, beta) / std::tgamma(1.0 + beta), 1e-8));
            for (double x : {0.2, 1.0, 1.7}) {
                const double integral = quad::integrate_1d(h, 0.0, x, spec).value;
                CHECK_THAT(inverse_stable_cdf(p, t, x), WithinAbs(integral, 1e-9));
                CHECK_THAT(dist->inverse_cdf(t, x), WithinAbs(integral, 1e-9));
                CHECK_THAT(dist->inverse_pdf(t, x), WithinRel(h(x), 1e-10));
            }
        }
    }
    CHECK_THROWS_AS(inverse_stable_pdf(StableParams(0.5), 0.0, 1.0), DomainError);
}

TEST_CASE("beta = 1/2 inverse density is half-normal") {
    // E_t for beta = 1/2 has density exp(-x^2/(4t)) / sqrt(pi t).
    const StableParams p(0.5);
    for (double x : {0.1, 1.0, 2.5})
        CHECK_THAT(inverse_stable_pdf(p, 1.0, x), WithinRel(std::exp(-x * x / 4.0) / std::sqrt(std::numbers::pi), 1e-10));
}

TEST_CASE("scaling identities") {
    const StableParams p(0.7);
    CHECK_THAT(stable_pdf(p, 2.0, 3.0), WithinRel(std::pow(3.0, -1.0 / 0.7) * stable_pdf(p, 2.0 * std::pow(3.0, -1.0 / 0.7), 1.0), 1e-12));
    CHECK(stable_pdf(p, -1.0, 1.0) == 0.0);
    // h(x;t) = t^{-beta} h(x t^{-beta}; 1)
    CHECK_THAT(inverse_stable_pdf(p, 2.0, 0.5),
               WithinRel(std::pow(2.0, -0.7) * inverse_stable_pdf(p, 1.0, 0.5 * std::pow(2.0, -0.7)), 1e-8));
}

TEST_CASE("inverse density is the x-derivative of P(E_t <= x)") {
    for (double beta : {0.3, 0.5, 0.7}) {
        const StableParams p(beta);
        for (double x : {0.3, 1.0, 2.0}) {
            const double h = 1e-4 * x;
            const double deriv = ((1.0 - stable_cdf(p, 1.0, x + h)) - (1.0 - stable_cdf(p, 1.0, x - h))) / (2.0 * h);
            CHECK_THAT(inverse_stable_pdf(p, 1.0, x), WithinAbs(deriv, 1e-4));
        }
    }
}

TEST_CASE("stable_laplace reference values") {
    const StableParams p(0.5);
    CHECK(stable_laplace(p, 0.0, 5.0) == 1.0);
    CHECK_THAT(stable_laplace(p, 1.0, 1.0), WithinRel(std::exp(-1.0), 1e-15));
    CHECK_THAT(stable_laplace(p, 2.0, 4.0), WithinRel(std::exp(-4.0), 1e-15));
}
