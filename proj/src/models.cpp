#include "ctrw/models.hpp"

#include <cmath>

#include "ctrw/errors.hpp"

namespace ctrw {

namespace {

constexpr const char* kModule = "renewal_kernels";

} // namespace

ModelSpec ModelSpec::example1(double beta) { return ModelSpec(ModelKind::Example1, StableParams(beta)); }
ModelSpec ModelSpec::example2(double beta) { return ModelSpec(ModelKind::Example2, StableParams(beta)); }
ModelSpec ModelSpec::pure_drift() { return ModelSpec(ModelKind::PureDrift, std::nullopt); }

ModelSpec ModelSpec::from_name(const std::string& name, double beta) {
    if (name == "example1") return example1(beta);
    if (name == "example2") return example2(beta);
    if (name == "pure-drift") return pure_drift();
    throw ParameterError(kModule, "unknown model '" + name + "' (valid: example1, example2, pure-drift)");
}

const StableParams& ModelSpec::stable() const {
    if (!stable_) throw UnsupportedModelError(kModule, "pure-drift model has no stable law");
    return *stable_;
}

std::string ModelSpec::name() const { return to_string(kind_); }

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Example1:
        return "example1";
    case ModelKind::Example2:
        return "example2";
    case ModelKind::PureDrift:
        return "pure-drift";
    }
    return "unknown";
}

double levy_tail(const StableParams& params, double v) {
    if (!(v > 0.0)) throw DomainError(kModule, "levy_tail needs v > 0");
    const double beta = params.beta();
    return std::pow(v, -beta) / std::tgamma(1.0 - beta);
}

double levy_density(const StableParams& params, double w) {
    if (!(w > 0.0)) throw DomainError(kModule, "levy_density needs w > 0");
    const double beta = params.beta();
    return beta * std::pow(w, -beta - 1.0) / std::tgamma(1.0 - beta);
}

double conditional_jump_tail(const StableParams& params, double v, double t) {
    if (!(v >= 0.0) || !(t >= 0.0)) throw DomainError(kModule, "conditional_jump_tail needs v >= 0 and t >= 0");
    if (v == 0.0) return t == 0.0 ? 1.0 : 0.0;
    if (std::isinf(t)) return 0.0;
    return std::pow((v + t) / v, -params.beta());
}

JumpDensity conditional_jump_density(const ModelSpec& model, double v, double w) {
    if (!(v > 0.0)) throw DomainError(kModule, "conditional_jump_density needs v > 0");
    const double beta = model.beta();
    JumpDensity out;
    if (!(w >= v)) return out;
    out.density = beta * std::pow(w, -beta - 1.0) * std::pow(v, beta);
    out.spatial_jump = model.kind() == ModelKind::Example2 ? w : 0.0;
    return out;
}

PotentialMeasure::PotentialMeasure(Kind kind, double beta, double chi, double tau)
    : kind_(kind), beta_(beta), chi_(chi), tau_(tau), dist_(StableDistribution::get(beta)) {}

double PotentialMeasure::density(double x, double t) const {
    if (kind_ != Kind::AbsolutelyContinuous)
        throw UnsupportedModelError(kModule, "potential is singular in space; use temporal_density");
    if (!(t > tau_) || !(x > chi_)) return 0.0;
    // Role swap: the occupation density in (x, t) is g(t - tau, x - chi).
    return dist_->pdf(t - tau_, x - chi_);
}

double PotentialMeasure::temporal_density(double t) const {
    if (!(t > tau_)) return 0.0;
    return std::pow(t - tau_, beta_ - 1.0) / std::tgamma(beta_);
}

double PotentialMeasure::atom_position(double t) const {
    if (kind_ != Kind::SpatiallySingular) throw UnsupportedModelError(kModule, "potential has no spatial atom");
    return chi_ + (t - tau_);
}

PotentialMeasure potential(const ModelSpec& model, double chi, double tau) {
    switch (model.kind()) {
    case ModelKind::Example1:
        return PotentialMeasure(PotentialMeasure::Kind::AbsolutelyContinuous, model.beta(), chi, tau);
    case ModelKind::Example2:
        return PotentialMeasure(PotentialMeasure::Kind::SpatiallySingular, model.beta(), chi, tau);
    case ModelKind::PureDrift:
        break;
    }
    throw UnsupportedModelError(kModule, "pure-drift occupation measure is a line measure without a density");
}

} // namespace ctrw
