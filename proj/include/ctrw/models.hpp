#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ctrw/stable.hpp"

namespace ctrw {

// Catalogue of space-time limit processes (A_u, D_u) started at (chi, tau).
//
//   Example1   uncoupled: A_u = chi + u, D_u = tau + Dbar_u
//   Example2   coupled, jumps equal waiting times: A_u = chi + Dbar_u,
//              D_u = tau + Dbar_u
//   PureDrift  deterministic A_u = chi + u, D_u = tau + u (tests only)
enum class ModelKind { Example1, Example2, PureDrift };

class ModelSpec {
public:
    static ModelSpec example1(double beta);
    static ModelSpec example2(double beta);
    static ModelSpec pure_drift();
    /// Builds from a name ("example1", "example2", "pure-drift").
    static ModelSpec from_name(const std::string& name, double beta);

    ModelKind kind() const noexcept { return kind_; }
    bool has_stable() const noexcept { return stable_.has_value(); }
    /// Throws UnsupportedModelError for PureDrift.
    const StableParams& stable() const;
    double beta() const { return stable().beta(); }
    std::string name() const;
    static constexpr int spatial_dimension = 1;

private:
    ModelSpec(ModelKind kind, std::optional<StableParams> stable) : kind_(kind), stable_(std::move(stable)) {}

    ModelKind kind_;
    std::optional<StableParams> stable_;
};

std::string to_string(ModelKind kind);

/// Phi([v, inf)) = v^{-beta} / Gamma(1-beta).
double levy_tail(const StableParams& params, double v);

/// Levy density beta w^{-beta-1} / Gamma(1-beta).
double levy_density(const StableParams& params, double w);

/// K_v(R x [v+t, inf)) = ((v+t)/v)^{-beta}; K_0 is the Dirac mass at the
/// origin.
double conditional_jump_tail(const StableParams& params, double v, double t);

struct JumpDensity {
    /// Density in the temporal jump size w of the normalised law K_v.
    double density = 0.0;
    /// The spatial jump that accompanies a temporal jump w.
    double spatial_jump = 0.0;
};

/// Law of a space-time jump given its temporal part exceeds v > 0.
JumpDensity conditional_jump_density(const ModelSpec& model, double v, double w);

// 0-potential of (A_u, D_u) started at (chi, tau).
class PotentialMeasure {
public:
    enum class Kind { AbsolutelyContinuous, SpatiallySingular };

    Kind kind() const noexcept { return kind_; }
    double chi() const noexcept { return chi_; }
    double tau() const noexcept { return tau_; }

    /// u(x,t) for an absolutely continuous potential.
    double density(double x, double t) const;
    /// Density of the time marginal, (t-tau)^{beta-1}/Gamma(beta) for both
    /// catalogue models.
    double temporal_density(double t) const;
    /// Spatial atom chi + (t - tau) of a spatially singular potential.
    double atom_position(double t) const;

private:
    friend PotentialMeasure potential(const ModelSpec&, double, double);
    PotentialMeasure(Kind kind, double beta, double chi, double tau);

    Kind kind_;
    double beta_;
    double chi_;
    double tau_;
    std::shared_ptr<const StableDistribution> dist_;
};

PotentialMeasure potential(const ModelSpec& model, double chi, double tau);

} // namespace ctrw
