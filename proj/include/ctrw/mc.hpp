#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ctrw/models.hpp"

namespace ctrw {

// One realisation of (A_u, D_u) on the grid u_k = k * u_max / n_steps.
struct PathSample {
    std::vector<double> u_grid;
    std::vector<double> d_values;
    std::vector<double> a_values;
    ModelSpec model;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Exact stable increments (du)^{1/beta} S over each grid step. Path
/// `stream` of a run is reproducible on its own from (seed, stream).
PathSample sample_path(const ModelSpec& model, double u_max, std::size_t n_steps, std::uint64_t seed,
                       double chi = 0.0, double tau = 0.0, std::uint64_t stream = 0);

/// The same path seen on every `factor`-th grid point.
PathSample coarsen(const PathSample& path, std::size_t factor);

struct RenewalReadout {
    double t = 0.0;
    /// E_t estimate: the first grid abscissa with D > t.
    double e = 0.0;
    /// The previous grid abscissa; E_t lies in (e_lo, e].
    double e_lo = 0.0;
    double g = 0.0;
    double h = 0.0;
    double v = 0.0;
    double r = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// Reads E_t, G_{t-}, H_t, V, R, X_{t-}, Y_t off a path. Throws HorizonError
/// when the path ends before D exceeds t.
RenewalReadout read_renewal(const PathSample& path, double t);

struct RenewalOptions {
    std::size_t n_paths = 100000;
    /// Fine grid step in operational time.
    double du = 1e-3;
    /// The coarse readout uses every `coarsen_factor`-th fine grid point.
    std::size_t coarsen_factor = 2;
    double u_max = 1e4;
    std::uint64_t seed = 0;
    int workers = 1;
    double chi = 0.0;
    double tau = 0.0;
};

// Readouts of many paths at fixed times without storing the paths.
// Index as [time][path].
struct RenewalSamples {
    std::vector<double> times;
    std::vector<std::vector<double>> e;
    std::vector<std::vector<double>> e_coarse;
    std::vector<std::vector<double>> g;
    std::vector<std::vector<double>> h;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y;
};

RenewalSamples simulate_renewals(const ModelSpec& model, std::vector<double> times, const RenewalOptions& options);

enum class WaitingLaw { ExactStable, ParetoTail };

struct CtrwConfig {
    double c = 1e3;
    WaitingLaw waiting_law = WaitingLaw::ExactStable;
    /// Largest clock time that may be queried.
    double horizon = 10.0;

    void validate() const;
};

/// X^c_t and Y^c_t per [time][path].
struct CtrwSamples {
    std::vector<double> times;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y;
};

/// Discrete CTRW at scale c started at the space-time origin. Example1 uses
/// jumps 1/c; Example2 jumps equal to the waiting times. ExactStable waits
/// are c^{-1/beta} S; ParetoTail waits are P (c Gamma(1-beta))^{-1/beta}
/// with P(P > w) = w^{-beta}, w >= 1.
CtrwSamples simulate_ctrw(const ModelSpec& model, const CtrwConfig& cfg, std::vector<double> times,
                          std::uint64_t seed, std::size_t n_paths, int workers = 1);

class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples);
    double operator()(double x) const;
    const std::vector<double>& sorted() const noexcept { return sorted_; }

private:
    std::vector<double> sorted_;
};

EmpiricalCdf empirical_cdf(std::vector<double> samples);

/// sup |F_n - F| over the sample points and their left limits.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic critical value of the one-sample KS statistic at level alpha.
double ks_critical_value(std::size_t n, double alpha = 0.01);

// Cell frequencies of (x, y) pairs. Pairs with x == y are counted only in
// the coincidence fraction, so the cells hold the off-diagonal part.
struct Histogram2d {
    std::vector<double> x_edges;
    std::vector<double> y_edges;
    /// Row-major, x index outer; counts divided by the number of pairs.
    std::vector<double> frequencies;
    double coincidence_fraction = 0.0;
    /// Off-diagonal pairs outside the grid.
    double outside_fraction = 0.0;
    std::size_t n = 0;

    std::size_t nx() const noexcept { return x_edges.size() - 1; }
    std::size_t ny() const noexcept { return y_edges.size() - 1; }
    double frequency(std::size_t i, std::size_t j) const { return frequencies[i * ny() + j]; }
};

Histogram2d histogram2d(std::span<const double> xs, std::span<const double> ys, std::vector<double> x_edges,
                        std::vector<double> y_edges);

/// Cell index of v in strictly increasing edges, or -1 outside [front, back).
long find_cell(std::span<const double> edges, double v);

} // namespace ctrw
