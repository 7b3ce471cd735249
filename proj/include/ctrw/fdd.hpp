#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctrw/models.hpp"
#include "ctrw/quadrature.hpp"

namespace ctrw {

/// (X_{t-}, V_{t-}): position before the current rest and its age.
struct StateXV {
    double x = 0.0;
    double v = 0.0;
};

/// (Y_t, R_t): position after the next jump and the remaining rest time.
struct StateYR {
    double y = 0.0;
    double r = 0.0;
};

struct Atom {
    std::vector<double> location;
    double weight = 0.0;
};

// A law on a state space with named coordinates, split into point masses
// and a continuous part. The continuous part is parametrised by free axes
// (iterated bounds, outermost first); `embed` maps free coordinates to the
// state, `project` maps a state back (nullopt off the support). For laws
// carried by a line, the density is with respect to the free coordinate.
// The density receives, per axis, the distances to the axis bounds.
struct KernelDensity {
    std::vector<std::string> coordinates;
    std::vector<Atom> atoms;
    std::vector<std::string> axis_names;
    std::vector<quad::NestedAxis> axes;
    std::function<double(const quad::NestedPoint&)> density;
    std::function<void(std::span<const double> free, std::span<double> state)> embed;
    std::function<std::optional<std::vector<double>>(std::span<const double> state)> project;
    std::string support;

    bool has_density() const noexcept { return !axes.empty(); }
    /// Density of the continuous part at a state; 0 off the support.
    double density_at(std::span<const double> state) const;
    /// Density at free coordinates; 0 outside the axis bounds.
    double density_free(std::span<const double> free) const;
    std::vector<double> embed_point(std::span<const double> free) const;
    double atom_mass() const;
};

struct MassReport {
    double total = 0.0;
    double atom_mass = 0.0;
    double continuous_mass = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

/// Atom weights plus the integral of the density over its axes.
MassReport total_mass(const KernelDensity& kernel, double rel_tol = 1e-6);

/// Density of the continuous part's marginal in free axis `axis` at `value`.
double marginal_density(const KernelDensity& kernel, std::size_t axis, double value, double rel_tol = 1e-7);

/// Law of (X_{t-}, Y_t, V_{t-}, R_t) for the process started at (chi, tau);
/// state coordinates (x, y, v, r).
KernelDensity joint_xyvr(const ModelSpec& model, double chi, double tau, double t);

/// Transition kernel of (X_{t-}, V_{t-}); state coordinates (x, v).
KernelDensity p_kernel(const ModelSpec& model, double t, StateXV from);

/// Transition kernel of (Y_t, R_t); state coordinates (y, r).
KernelDensity q_kernel(const ModelSpec& model, double t, StateYR from);

// Direct pointwise kernel densities (continuous part only), the same
// functions p_kernel and q_kernel wrap. Zero off the support; for Example2
// the value is the density along the support line.
double p_density(const ModelSpec& model, double t, StateXV from, StateXV to);
double q_density(const ModelSpec& model, double t, StateYR from, StateYR to);

struct CompositionOptions {
    double rel_tol = 1e-6;
    double abs_tol = 1e-7;
};

/// Density of the continuous part of P_{t1} P_{t2} (from; .) at `to`,
/// obtained by integrating over the intermediate state.
double compose_p_density(const ModelSpec& model, double t1, double t2, StateXV from, StateXV to,
                         const CompositionOptions& options = {});
double compose_q_density(const ModelSpec& model, double t1, double t2, StateYR from, StateYR to,
                         const CompositionOptions& options = {});

// ----- two-time law of the inverse stable subordinator -----

/// Evaluation route for the off-diagonal two-time density. The triple
/// integral is the direct form; the overshoot form does the innermost
/// integral in closed form (through the inverse stable density) and is two
/// orders of magnitude faster at the same accuracy.
enum class TwoTimeMethod { Overshoot, TripleIntegral };

struct TwoTimeOptions {
    double rel_tol = 1e-6;
    TwoTimeMethod method = TwoTimeMethod::Overshoot;
    /// Gauss-Legendre order per cell axis.
    int cell_order = 4;
    int workers = 1;
};

/// Density d(x) of the mass E_{t1} = E_{t2} along the diagonal.
double two_time_diagonal_density(const StableParams& params, double t1, double t2, double x,
                                 double rel_tol = 1e-8);

/// Density of (E_{t1}, E_{t2}) at y > x > 0, by the triple integral over
/// (v, w, s): age at t1, age at t2, and the completed waiting time.
double two_time_offdiagonal_density(const StableParams& params, double t1, double t2, double x, double y,
                                    double rel_tol = 1e-6);

/// Same density through the overshoot at t1: the joint density of
/// (E_{t1}, R_{t1}) convolved with the law of a fresh E over t2 - t1 - R.
double two_time_offdiagonal_density_overshoot(const StableParams& params, double t1, double t2, double x, double y,
                                              double rel_tol = 1e-8);

/// Total mass on the diagonal, P(E_{t1} = E_{t2}).
double two_time_diagonal_mass(const StableParams& params, double t1, double t2, double rel_tol = 1e-8);

/// Marginal densities of E_{t1} (which = 1) or E_{t2} (which = 2) computed
/// from the two-time law.
double two_time_marginal(const StableParams& params, double t1, double t2, int which, double value,
                         double rel_tol = 1e-6, TwoTimeMethod method = TwoTimeMethod::Overshoot);

// Cell averages of the two-time law on a rectangular grid. Cells are
// [x_edges[i], x_edges[i+1]) x [y_edges[j], y_edges[j+1]); only the part of
// a cell above the diagonal carries off-diagonal density. The diagonal is
// kept as a 1D density in x, never binned into cells.
struct JointGrid {
    std::vector<double> x_edges;
    std::vector<double> y_edges;
    /// Off-diagonal mass per cell divided by the full cell area; row-major
    /// (x index outer).
    std::vector<double> values;
    /// Mean of d(x) over each x cell.
    std::vector<double> diagonal_density;
    /// Total diagonal mass over (0, inf).
    double diagonal_atom = 0.0;
    /// Off-diagonal mass inside the grid.
    double offdiagonal_mass = 0.0;
    /// Diagonal mass falling outside the x range.
    double diagonal_outside = 0.0;
    /// Cells whose inner quadrature did not converge.
    std::vector<std::size_t> flagged;

    std::size_t nx() const noexcept { return x_edges.empty() ? 0 : x_edges.size() - 1; }
    std::size_t ny() const noexcept { return y_edges.empty() ? 0 : y_edges.size() - 1; }
    double value(std::size_t i, std::size_t j) const { return values[i * ny() + j]; }
    /// Probability of the cell (off-diagonal part only).
    double cell_mass(std::size_t i, std::size_t j) const;
    /// Diagonal mass with x in cell i.
    double diagonal_cell_mass(std::size_t i) const;
    /// Mass represented by the grid, diagonal included.
    double grid_mass() const;
};

JointGrid joint_inverse_two_times(const StableParams& params, double t1, double t2, std::vector<double> x_edges,
                                  std::vector<double> y_edges, const TwoTimeOptions& options = {});

/// Edges lo, lo + h, ..., hi with `cells` cells.
std::vector<double> uniform_edges(double lo, double hi, std::size_t cells);

// ----- n-time laws as factored conditionals -----

class FddChain {
public:
    FddChain(ModelSpec model, double chi, double tau, std::vector<double> times);

    const std::vector<double>& times() const noexcept { return times_; }
    const ModelSpec& model() const noexcept { return model_; }

    /// Law of (X_{t1-}, V_{t1-}).
    KernelDensity initial() const;
    /// Conditional law of the state at times[i+1] given `from` at times[i].
    KernelDensity factor(std::size_t i, StateXV from) const;

    /// Joint density of the continuous parts at times[i] and times[i+1]:
    /// density of the law at times[i] times the transition density.
    double pair_density(std::size_t i, StateXV first, StateXV second) const;

    /// P(no renewal in (times[i], times[i+1]]) when started from the law at
    /// times[0]; for Example1 this is P(E_{t_0} = E_{t_1}).
    double no_renewal_probability(double rel_tol = 1e-8) const;

    /// Joint density of the continuous parts at times[i] and times[i+2],
    /// the state at times[i+1] integrated out.
    double skip_density(std::size_t i, StateXV first, StateXV third, const CompositionOptions& options = {}) const;

private:
    ModelSpec model_;
    double chi_;
    double tau_;
    std::vector<double> times_;
};

FddChain fdd_chain(const ModelSpec& model, double chi, double tau, std::vector<double> times);

// ----- moments -----

struct MomentResult {
    double value = 0.0;
    /// Mass captured by the grid.
    double mass = 0.0;
    /// True when 1 - mass exceeds the threshold.
    bool truncated = false;
};

/// int x^power f(x) dx over [lo, hi] by composite Gauss-Legendre on `cells`
/// equal cells; flags truncation when the captured mass is below
/// 1 - truncation_threshold.
MomentResult grid_moment(const std::function<double(double)>& density, double lo, double hi, std::size_t cells,
                         int power, double truncation_threshold = 1e-5);

/// E[E_{t1}^px E_{t2}^py] from a joint grid (cell-midpoint rule off the
/// diagonal, diagonal cells included).
MomentResult grid_moment(const JointGrid& grid, int px, int py, double truncation_threshold = 1e-3);

} // namespace ctrw
