#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ctrw/function_ref.hpp"

namespace ctrw::quad {

// Tolerances and endpoint information for one integration axis.
//
// A declared exponent alpha > -1 at an endpoint says the integrand behaves
// like (x-a)^alpha (left) or (b-x)^alpha (right); the integrator then works in
// a variable in which that factor is smooth. For a right-infinite range the
// map x = a + scale*w/(1-w) is used; `tail_decay` q > 1 declares f ~ x^{-q}.
struct QuadratureSpec {
    double rel_tol = 1e-7;
    double abs_tol = 0.0;
    int max_subdivisions = 400;
    std::optional<double> left_exponent;
    std::optional<double> right_exponent;
    double scale = 1.0;
    std::optional<double> tail_decay;

    void validate() const;

    QuadratureSpec& with_left(double alpha) {
        left_exponent = alpha;
        return *this;
    }
    QuadratureSpec& with_right(double alpha) {
        right_exponent = alpha;
        return *this;
    }
    QuadratureSpec& with_tail(double q) {
        tail_decay = q;
        return *this;
    }
    QuadratureSpec& with_scale(double s) {
        scale = s;
        return *this;
    }
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
    bool converged = true;
};

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A quadrature node together with its distances to the two ends of the
/// integration interval. The distances stay accurate where `x` itself has
/// rounded onto an endpoint, so integrands with endpoint singularities
/// should build the singular factor from them.
struct Abscissa {
    double x = 0.0;
    double lo_gap = 0.0;
    double hi_gap = 0.0;
    /// False when x rounded onto an endpoint.
    bool interior = true;
};

namespace detail {

template <std::size_t N>
struct VectorResult {
    std::array<double, N> value{};
    std::array<double, N> error{};
    long evaluations = 0;
    bool converged = true;
};

template <std::size_t N>
VectorResult<N> integrate_vector(FunctionRef<std::array<double, N>(const Abscissa&)> f, double a, double b,
                                 const QuadratureSpec& spec);

extern template VectorResult<1> integrate_vector<1>(FunctionRef<std::array<double, 1>(const Abscissa&)>, double, double,
                                                    const QuadratureSpec&);
extern template VectorResult<2> integrate_vector<2>(FunctionRef<std::array<double, 2>(const Abscissa&)>, double, double,
                                                    const QuadratureSpec&);

} // namespace detail

/// Adaptive Gauss-Kronrod (10/21) integration of f over [a,b]; b may be +inf.
/// Throws EvaluationError if f returns a non-finite value. Nodes that round
/// onto an endpoint are skipped.
QuadratureResult integrate_1d(FunctionRef<double(double)> f, double a, double b, const QuadratureSpec& spec = {});

/// As integrate_1d, with the integrand seeing endpoint distances.
QuadratureResult integrate_1d_gaps(FunctionRef<double(const Abscissa&)> f, double a, double b,
                                   const QuadratureSpec& spec = {});

/// Same as integrate_1d but throws IntegrationError when not converged.
double integrate_or_throw(FunctionRef<double(double)> f, double a, double b, const QuadratureSpec& spec,
                          const char* module);

struct AxisRange {
    double lo = 0.0;
    double hi = 0.0;
    /// Length scale for a right-infinite axis; <= 0 keeps QuadratureSpec::scale.
    double scale = 0.0;
};

/// Bounds of one axis as a function of the values of the enclosing axes
/// (outermost first).
using BoundFn = std::function<AxisRange(std::span<const double> outer)>;

struct NestedAxis {
    BoundFn bounds;
    QuadratureSpec spec;

    static NestedAxis fixed(double lo, double hi, QuadratureSpec spec = {}) {
        return {[lo, hi](std::span<const double>) { return AxisRange{lo, hi}; }, spec};
    }
};

struct NestedPoint {
    std::span<const double> x;
    std::span<const double> lo_gap;
    std::span<const double> hi_gap;
};

/// Iterated integral of f(point) over a region given axis by axis; axis 0
/// is outermost. Inner error estimates are integrated along with the values
/// and added to the outer estimate. Up to three axes.
QuadratureResult integrate_nested(FunctionRef<double(std::span<const double>)> f, std::span<const NestedAxis> axes);
QuadratureResult integrate_nested_gaps(FunctionRef<double(const NestedPoint&)> f, std::span<const NestedAxis> axes);

/// Gauss-Legendre nodes and weights on [-1,1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

} // namespace ctrw::quad
