#include <cmath>
#include <numeric>

#include "catch_amalgamated.hpp"
#include "ctrw/errors.hpp"
#include "ctrw/fdd.hpp"
#include "ctrw/mc.hpp"

using namespace ctrw;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double standard_error(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

} // namespace

TEST_CASE("pure drift paths follow the grid") {
    const auto path = sample_path(ModelSpec::pure_drift(), 2.0, 20, 7);
    CHECK(path.a_values == path.u_grid);
    CHECK(path.d_values == path.u_grid);
    const auto r = read_renewal(path, 0.7);
    CHECK_THAT(r.e, WithinAbs(0.7, 1e-15));
    CHECK(r.v == 0.0);
    CHECK(r.r == 0.0);
    CHECK(r.g == 0.7);
    CHECK(r.h == 0.7);
}

TEST_CASE("Example2 paths move space and time together") {
    const auto origin = sample_path(ModelSpec::example2(0.6), 3.0, 300, 11);
    CHECK(origin.a_values == origin.d_values);
    const auto path = sample_path(ModelSpec::example2(0.6), 3.0, 300, 11, 1.5, 0.5);
    for (std::size_t k = 0; k < path.u_grid.size(); ++k)
        CHECK_THAT(path.a_values[k] - 1.5, WithinAbs(path.d_values[k] - 0.5, 1e-14 * (1.0 + path.d_values[k])));
    for (std::size_t k = 1; k < path.d_values.size(); ++k) CHECK(path.d_values[k] > path.d_values[k - 1]);
}

TEST_CASE("Example2 readouts from the origin") {
    const auto path = sample_path(ModelSpec::example2(0.5), 20.0, 4000, 3);
    for (double t : {0.3, 1.0, 2.5}) {
        const auto r = read_renewal(path, t);
        CHECK(r.g <= t);
        CHECK(r.h > t);
        CHECK(r.x == r.g);
        CHECK(r.y == r.h);
        CHECK_THAT(r.x, WithinAbs(t - r.v, 1e-14));
        CHECK_THAT(r.y, WithinAbs(t + r.r, 1e-14));
    }
}

TEST_CASE("readout beyond the path horizon is an error") {
    const auto path = sample_path(ModelSpec::example1(0.5), 1e-3, 2, 1);
    CHECK_THROWS_AS(read_renewal(path, 1e6), HorizonError);
    CHECK_THROWS_AS(sample_path(ModelSpec::example1(0.5), 1.0, 0, 1), ParameterError);
}

TEST_CASE("terminal value of a path has the stable law") {
    const auto dist = StableDistribution::get(0.5);
    const std::size_t n = 100000;
    std::vector<double> terminal(n);
    for (std::size_t i = 0; i < n; ++i) terminal[i] = sample_path(ModelSpec::example1(0.5), 1.0, 4, 99, 0.0, 0.0, i).d_values.back();
    CHECK(ks_distance(terminal, [&](double t) { return dist->cdf(t, 1.0); }) < ks_critical_value(n));
}

TEST_CASE("streamed readouts match stored paths") {
    const auto model = ModelSpec::example1(0.7);
    RenewalOptions opt;
    opt.n_paths = 20;
    opt.du = 0.01;
    opt.seed = 5;
    const auto sims = simulate_renewals(model, {0.5, 1.5}, opt);
    for (std::size_t p = 0; p < opt.n_paths; ++p) {
        const auto path = sample_path(model, 40.0, 4000, opt.seed, 0.0, 0.0, p);
        const auto coarse = coarsen(path, 2);
        for (std::size_t j = 0; j < 2; ++j) {
            const auto r = read_renewal(path, sims.times[j]);
            CHECK_THAT(sims.e[j][p], WithinRel(r.e, 1e-12));
            CHECK_THAT(sims.g[j][p], WithinRel(r.g, 1e-9));
            CHECK_THAT(sims.h[j][p], WithinRel(r.h, 1e-9));
            CHECK_THAT(sims.e_coarse[j][p], WithinRel(read_renewal(coarse, sims.times[j]).e, 1e-12));
        }
    }
}

TEST_CASE("renewal simulation is independent of the worker count") {
    RenewalOptions opt;
    opt.n_paths = 500;
    opt.du = 0.01;
    opt.seed = 17;
    const auto a = simulate_renewals(ModelSpec::example2(0.4), {1.0, 2.0}, opt);
    opt.workers = 3;
    const auto b = simulate_renewals(ModelSpec::example2(0.4), {1.0, 2.0}, opt);
    CHECK(a.e == b.e);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
}

TEST_CASE("mean of E_1 after grid refinement") {
    // First-passage readouts overshoot by about du/2; two resolutions on the
    // same paths remove the linear term.
    RenewalOptions opt;
    opt.n_paths = 200000;
    opt.du = 0.01;
    opt.seed = 2718;
    const auto s = simulate_renewals(ModelSpec::example1(0.5), {1.0}, opt);
    std::vector<double> extrapolated(opt.n_paths);
    for (std::size_t p = 0; p < opt.n_paths; ++p) extrapolated[p] = 2.0 * s.e[0][p] - s.e_coarse[0][p];
    const double oracle = 1.0 / std::tgamma(1.5);
    CHECK(std::abs(mean(extrapolated) - oracle) < 3.0 * standard_error(extrapolated));
}

TEST_CASE("readout statistics are stable under grid refinement") {
    RenewalOptions opt;
    opt.n_paths = 100000;
    opt.du = 0.002;
    opt.seed = 31;
    const auto s = simulate_renewals(ModelSpec::example1(0.5), {1.0}, opt);
    CHECK(std::abs(mean(s.e[0]) - mean(s.e_coarse[0])) < standard_error(s.e[0]));
}

TEST_CASE("CTRW before the first arrival stays at the origin") {
    for (auto model : {ModelSpec::example1(0.5), ModelSpec::example2(0.5)}) {
        const auto s = simulate_ctrw(model, CtrwConfig{10.0, WaitingLaw::ParetoTail, 1.0}, {1e-12}, 1, 1000);
        for (double x : s.x[0]) CHECK(x == 0.0);
    }
}

TEST_CASE("coupled CTRW brackets the clock") {
    const std::vector<double> times{0.5, 1.0, 3.0};
    for (auto law : {WaitingLaw::ExactStable, WaitingLaw::ParetoTail}) {
        const auto s = simulate_ctrw(ModelSpec::example2(0.6), CtrwConfig{100.0, law, 3.0}, times, 4, 5000);
        for (std::size_t j = 0; j < times.size(); ++j)
            for (std::size_t p = 0; p < 5000; ++p) {
                CHECK(s.x[j][p] < times[j]);
                CHECK(s.y[j][p] > times[j]);
            }
    }
}

TEST_CASE("CTRW converges to the inverse stable law") {
    const auto dist = StableDistribution::get(0.5);
    const std::size_t n = 20000;
    const auto s = simulate_ctrw(ModelSpec::example1(0.5), CtrwConfig{1000.0, WaitingLaw::ExactStable, 1.0}, {1.0}, 8, n);
    CHECK(ks_distance(s.x[0], [&](double x) { return dist->inverse_cdf(1.0, x); }) < ks_critical_value(n));
}

TEST_CASE("CTRW configuration checks") {
    CHECK_THROWS_AS(CtrwConfig({0.0, WaitingLaw::ExactStable, 1.0}).validate(), ParameterError);
    CHECK_THROWS_AS(simulate_ctrw(ModelSpec::example1(0.5), CtrwConfig{10.0, WaitingLaw::ExactStable, 1.0}, {2.0}, 1, 10),
                    HorizonError);
    CHECK_THROWS_AS(simulate_ctrw(ModelSpec::example1(0.5), CtrwConfig{10.0, WaitingLaw::ExactStable, 5.0}, {2.0, 1.0}, 1, 10),
                    DomainError);
}

TEST_CASE("KS distance basics") {
    CHECK_THAT(ks_distance({0.5}, [](double x) { return std::clamp(x, 0.0, 1.0); }), WithinAbs(0.5, 1e-15));
    CHECK_THROWS_AS(ks_distance({}, [](double x) { return x; }), DomainError);
    CHECK_THAT(ks_critical_value(1000000), WithinRel(0.001628, 1e-3));

    RngStream rng(42, 0);
    std::vector<double> u(1000000);
    for (auto& x : u) x = rng.uniform();
    CHECK(ks_distance(u, [](double x) { return x; }) < 0.00163);

    // The empirical cdf of the sample reproduces its own steps.
    std::vector<double> small{0.3, 0.1, 0.7, 0.5};
    const auto F = empirical_cdf(small);
    CHECK(F(0.1) == 0.25);
    CHECK(F(0.3) == 0.5);
    CHECK(F(0.05) == 0.0);
    CHECK(F(0.7) == 1.0);
    CHECK(ks_distance(small, [&](double x) { return F(x); }) <= 0.25);
}

TEST_CASE("histogram2d cells and coincidences") {
    const std::vector<double> xs(10, 0.5), ys(10, 0.75);
    const auto h = histogram2d(xs, ys, uniform_edges(0, 1, 4), uniform_edges(0, 1, 4));
    CHECK(h.frequency(2, 3) == 1.0);
    CHECK(h.coincidence_fraction == 0.0);
    const auto d = histogram2d(xs, xs, uniform_edges(0, 1, 4), uniform_edges(0, 1, 4));
    CHECK(d.coincidence_fraction == 1.0);
    const std::vector<double> far{5.0};
    const std::vector<double> near{0.1};
    CHECK(histogram2d(near, far, uniform_edges(0, 1, 4), uniform_edges(0, 1, 4)).outside_fraction == 1.0);
    CHECK_THROWS_AS(histogram2d(xs, far, uniform_edges(0, 1, 4), uniform_edges(0, 1, 4)), DomainError);
}
