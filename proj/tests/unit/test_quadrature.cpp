#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/quadrature.hpp"

using namespace ctrw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("smooth integrand on a finite interval") {
    const auto r = quad::integrate_1d([](double x) { return std::cos(x); }, 0.0, 1.0, {.rel_tol = 1e-12});
    REQUIRE(r.converged);
    CHECK_THAT(r.value, WithinRel(std::sin(1.0), 1e-13));
    CHECK(r.error_estimate < 1e-12);
}

TEST_CASE("left endpoint singularity with declared exponent") {
    quad::QuadratureSpec spec{.rel_tol = 1e-12};
    spec.with_left(-0.5);
    const auto r = quad::integrate_1d([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, spec);
    CHECK_THAT(r.value, WithinAbs(2.0, 1e-10));
}

TEST_CASE("undeclared endpoint singularity still converges") {
    const auto r = quad::integrate_1d([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {.rel_tol = 1e-8});
    CHECK_THAT(r.value, WithinAbs(2.0, 1e-6));
}

namespace {

// Brute-force value of int_0^{1/2} s^{a} (1-s)^{c} ds: dyadic panels toward
// s = 0, each integrated without any substitution, plus the analytic bound
// on what lies below the last panel.
double dyadic_half(double a, double c, double& err) {
    double sum = 0.0;
    err = 0.0;
    double hi = 0.5;
    for (int k = 0; k < 1000; ++k) {
        const double lo = 0.5 * hi;
        const auto r = quad::integrate_1d([&](double s) { return std::pow(s, a) * std::pow(1.0 - s, c); }, lo, hi,
                                          {.rel_tol = 1e-13});
        sum += r.value;
        err += r.error_estimate;
        hi = lo;
        if (hi < 1e-300) break;
    }
    err += std::pow(hi, 1.0 + a) / (1.0 + a) * std::pow(0.5, std::min(c, 0.0));
    return sum;
}

} // namespace

TEST_CASE("beta integral with both endpoints singular") {
    for (double b : {0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9}) {
        INFO("beta = " << b);
        quad::QuadratureSpec spec{.rel_tol = 1e-11};
        spec.with_left(b - 1.0).with_right(-b);
        const auto r = quad::integrate_1d_gaps(
            [b](const quad::Abscissa& p) { return std::pow(p.lo_gap, b - 1.0) * std::pow(p.hi_gap, -b); }, 0.0, 1.0,
            spec);
        // B(b, 1-b) = pi / sin(pi b)
        CHECK_THAT(r.value, WithinRel(std::numbers::pi / std::sin(std::numbers::pi * b), 1e-8));

        // Brute force: split at 1/2 and reflect the right half.
        double e1 = 0.0, e2 = 0.0;
        const double brute = dyadic_half(b - 1.0, -b, e1) + dyadic_half(-b, b - 1.0, e2);
        CHECK(std::abs(brute - r.value) <= e1 + e2 + r.error_estimate);
    }
    quad::QuadratureSpec spec{.rel_tol = 1e-12};
    spec.with_left(-0.5).with_right(-0.5);
    const auto half = quad::integrate_1d([](double x) { return std::pow(x, -0.5) * std::pow(1.0 - x, -0.5); }, 0.0,
                                         1.0, spec);
    CHECK_THAT(half.value, WithinAbs(std::numbers::pi, 1e-8));
}

TEST_CASE("infinite range") {
    const auto r = quad::integrate_1d([](double x) { return std::exp(-x); }, 0.0, quad::kInfinity, {.rel_tol = 1e-12});
    CHECK_THAT(r.value, WithinRel(1.0, 1e-10));

    quad::QuadratureSpec spec{.rel_tol = 1e-11};
    spec.with_tail(1.5);
    const auto tail = quad::integrate_1d([](double x) { return std::pow(x, -1.5); }, 1.0, quad::kInfinity, spec);
    CHECK_THAT(tail.value, WithinRel(2.0, 1e-9));
}

TEST_CASE("power-law tail with left singularity on a half line") {
    // int_0^inf x^{-1/2} / (1 + x) dx = pi
    quad::QuadratureSpec spec{.rel_tol = 1e-11};
    spec.with_left(-0.5).with_tail(1.5);
    const auto r = quad::integrate_1d([](double x) { return 1.0 / (std::sqrt(x) * (1.0 + x)); }, 0.0,
                                      quad::kInfinity, spec);
    CHECK_THAT(r.value, WithinRel(std::numbers::pi, 1e-9));
}

TEST_CASE("NaN integrand raises an evaluation error") {
    CHECK_THROWS_AS(quad::integrate_1d([](double x) { return x > 0.5 ? std::nan("") : 1.0; }, 0.0, 1.0),
                    EvaluationError);
}

TEST_CASE("non-convergence is reported") {
    quad::QuadratureSpec spec{.rel_tol = 1e-14, .max_subdivisions = 3};
    const auto r = quad::integrate_1d([](double x) { return std::sin(1.0 / x); }, 1e-3, 1.0, spec);
    CHECK_FALSE(r.converged);
    CHECK_THROWS_AS(quad::integrate_or_throw([](double x) { return std::sin(1.0 / x); }, 1e-3, 1.0, spec, "test"),
                    IntegrationError);
}

TEST_CASE("invalid specs are rejected") {
    quad::QuadratureSpec spec;
    spec.with_left(-1.0);
    CHECK_THROWS_AS(quad::integrate_1d([](double) { return 1.0; }, 0.0, 1.0, spec), ParameterError);
    CHECK_THROWS_AS(quad::integrate_1d([](double) { return 1.0; }, 0.0, 1.0, {.rel_tol = -1.0}), ParameterError);
}

TEST_CASE("reversed and empty intervals") {
    CHECK(quad::integrate_1d([](double) { return 1.0; }, 1.0, 1.0).value == 0.0);
    CHECK_THROWS_AS(quad::integrate_1d([](double x) { return x; }, 1.0, 0.0), DomainError);
}

TEST_CASE("nested integration over rectangles and triangles") {
    const std::array square{quad::NestedAxis::fixed(0.0, 1.0, {.rel_tol = 1e-10}),
                            quad::NestedAxis::fixed(0.0, 1.0, {.rel_tol = 1e-10})};
    auto one = [](std::span<const double>) { return 1.0; };
    CHECK_THAT(quad::integrate_nested(one, square).value, WithinRel(1.0, 1e-12));

    // Triangle 0 < y < x < 1: int x*y = 1/8
    const std::array triangle{
        quad::NestedAxis::fixed(0.0, 1.0, {.rel_tol = 1e-10}),
        quad::NestedAxis{[](std::span<const double> outer) { return quad::AxisRange{0.0, outer[0]}; }, {.rel_tol = 1e-10}}};
    const auto r = quad::integrate_nested([](std::span<const double> p) { return p[0] * p[1]; }, triangle);
    CHECK_THAT(r.value, WithinRel(0.125, 1e-10));
    CHECK(r.error_estimate < 1e-8);

    // Three axes, singular inner factor: int_0^1 int_0^1 int_0^1 x^{-1/2} y z = 2 * 1/2 * 1/2
    quad::QuadratureSpec sing{.rel_tol = 1e-10};
    sing.with_left(-0.5);
    const std::array cube{quad::NestedAxis::fixed(0.0, 1.0, {.rel_tol = 1e-10}),
                          quad::NestedAxis::fixed(0.0, 1.0, {.rel_tol = 1e-10}),
                          quad::NestedAxis::fixed(0.0, 1.0, sing)};
    const auto c = quad::integrate_nested([](std::span<const double> p) { return p[0] * p[1] / std::sqrt(p[2]); }, cube);
    CHECK_THAT(c.value, WithinRel(0.5, 1e-9));
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    for (int n : {1, 2, 5, 12}) {
        const auto& gl = quad::gauss_legendre(n);
        for (int p = 0; p < 2 * n; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], p);
            const double exact = (p % 2 == 1) ? 0.0 : 2.0 / (p + 1);
            CHECK_THAT(s, WithinAbs(exact, 1e-13));
        }
    }
}
