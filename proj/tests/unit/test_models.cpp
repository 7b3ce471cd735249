#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/models.hpp"
#include "ctrw/quadrature.hpp"

using namespace ctrw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Levy tail values and monotonicity") {
    const StableParams p(0.5);
    CHECK_THAT(levy_tail(p, 1.0), WithinRel(1.0 / std::sqrt(std::numbers::pi), 1e-14));
    CHECK_THAT(levy_tail(p, 4.0), WithinRel(0.5 / std::sqrt(std::numbers::pi), 1e-14));
    CHECK(levy_tail(p, 0.3) > levy_tail(p, 0.4));
    CHECK_THROWS_AS(levy_tail(p, 0.0), DomainError);
    // Tail is the integral of the density.
    const StableParams q(0.7);
    quad::QuadratureSpec spec{.rel_tol = 1e-12};
    spec.with_tail(1.7);
    CHECK_THAT(quad::integrate_1d([&](double w) { return levy_density(q, w); }, 0.4, quad::kInfinity, spec).value,
               WithinRel(levy_tail(q, 0.4), 1e-10));
}

TEST_CASE("conditional jump tail") {
    const StableParams p(0.5);
    CHECK_THAT(conditional_jump_tail(p, 1.0, 1.0), WithinRel(std::sqrt(0.5), 1e-15));
    CHECK(conditional_jump_tail(p, 3.0, 0.0) == 1.0);
    CHECK(conditional_jump_tail(p, 0.0, 2.0) == 0.0);
    CHECK(conditional_jump_tail(p, 0.0, 0.0) == 1.0);
    CHECK_THROWS_AS(conditional_jump_tail(p, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(conditional_jump_tail(p, 1.0, -1.0), DomainError);
}

TEST_CASE("conditional jump tail is a semigroup") {
    const StableParams p(0.37);
    for (double v : {0.01, 0.5, 3.0})
        for (double t1 : {0.1, 1.0, 7.0})
            for (double t2 : {0.2, 2.0}) {
                const double lhs = conditional_jump_tail(p, v, t1 + t2);
                const double rhs = conditional_jump_tail(p, v, t1) * conditional_jump_tail(p, v + t1, t2);
                CHECK_THAT(lhs, WithinRel(rhs, 1e-14));
            }
}

TEST_CASE("conditional jump density") {
    const auto m1 = ModelSpec::example1(0.5);
    const auto m2 = ModelSpec::example2(0.5);
    CHECK_THAT(conditional_jump_density(m1, 1.0, 4.0).density, WithinRel(0.0625, 1e-14));
    CHECK(conditional_jump_density(m1, 1.0, 0.5).density == 0.0);
    CHECK(conditional_jump_density(m1, 1.0, 4.0).spatial_jump == 0.0);
    CHECK(conditional_jump_density(m2, 1.0, 4.0).spatial_jump == 4.0);
    CHECK_THROWS_AS(conditional_jump_density(m1, 0.0, 1.0), DomainError);

    const auto m = ModelSpec::example1(0.7);
    quad::QuadratureSpec spec{.rel_tol = 1e-12};
    spec.with_tail(1.7);
    const double mass =
        quad::integrate_1d([&](double w) { return conditional_jump_density(m, 0.3, w).density; }, 0.3, quad::kInfinity, spec)
            .value;
    CHECK_THAT(mass, WithinAbs(1.0, 1e-10));

    for (double v : {0.1, 1.0})
        for (double w : {v, 2.0 * v, 10.0})
            CHECK_THAT(levy_tail(m.stable(), v) * conditional_jump_density(m, v, w).density,
                       WithinRel(levy_density(m.stable(), w), 1e-12));
}

TEST_CASE("potentials of the catalogue models") {
    const auto u1 = potential(ModelSpec::example1(0.5), 0.0, 0.0);
    CHECK(u1.kind() == PotentialMeasure::Kind::AbsolutelyContinuous);
    CHECK_THAT(u1.density(1.0, 1.0), WithinRel(std::exp(-0.25) / (2.0 * std::sqrt(std::numbers::pi)), 1e-10));
    CHECK(u1.density(1.0, -0.5) == 0.0);
    CHECK(u1.density(-1.0, 1.0) == 0.0);

    const auto u2 = potential(ModelSpec::example2(0.5), 0.0, 0.0);
    CHECK(u2.kind() == PotentialMeasure::Kind::SpatiallySingular);
    CHECK_THAT(u2.temporal_density(1.0), WithinRel(1.0 / std::sqrt(std::numbers::pi), 1e-14));
    CHECK(u2.atom_position(2.5) == 2.5);
    CHECK_THROWS_AS(u2.density(1.0, 1.0), UnsupportedModelError);

    CHECK_THROWS_AS(potential(ModelSpec::pure_drift(), 0.0, 0.0), UnsupportedModelError);
    CHECK_THROWS_AS(ModelSpec::from_name("example3", 0.5), ParameterError);
    CHECK(ModelSpec::from_name("example2", 0.4).kind() == ModelKind::Example2);
}

TEST_CASE("occupation density integrates over space to the temporal density") {
    // int_0^inf g(t,u) du = t^{beta-1}/Gamma(beta), with the direct density.
    for (double beta : {0.3, 0.5, 0.7}) {
        const StableParams p(beta);
        for (double t : {0.5, 1.0, 2.0}) {
            quad::QuadratureSpec spec{.rel_tol = 1e-9, .max_subdivisions = 2000};
            spec.with_scale(std::pow(t, beta));
            const double lhs =
                quad::integrate_1d([&](double u) { return stable_pdf(p, t, u); }, 0.0, quad::kInfinity, spec).value;
            CHECK_THAT(lhs, WithinRel(std::pow(t, beta - 1.0) / std::tgamma(beta), 1e-6));
        }
    }
}
