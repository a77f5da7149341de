#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "nsopt/core.hpp"
#include "nsopt/functions.hpp"

namespace nsopt {

/// What a gradient oracle hands back. The value is present only in regimes
/// that allow value access (deterministic and sub-Gaussian; never in the
/// finite-variance regime).
struct OracleReply {
    std::optional<double> value;
    Vector gradient;
};

/// Reply shape of the finite-variance regime. There is no value member, so
/// a solver written against this type cannot read function values at all.
struct GradOnlyReply {
    Vector gradient;
};

enum class OracleRegime { Deterministic, FiniteVariance, SubGaussian };
const char* to_string(OracleRegime r);

/// Exact value and a direction-consistent generalized gradient. A zero (or
/// empty) direction falls back to the canonical probe e1; any gradient
/// selection is valid for d = 0 since <g, 0> = 0 = f'(x, 0).
OracleReply query_det(const DirDiffFunction& f, const Vector& x, const Vector& d);

/// Gradient with additive isotropic Gaussian noise of total variance
/// spec.variance_sigma2. The mean is exactly the deterministic selection, so
/// E[g] lies in the generalized gradient; no value is exposed.
GradOnlyReply query_sto(const DirDiffFunction& f, const Vector& x, const Vector& d,
                        RngStream& rng);

/// Value with Gaussian noise of std spec.subg_sigma_f and gradient with
/// isotropic Gaussian noise of total variance spec.subg_sigma_g^2 (Gaussian
/// noise is sub-Gaussian with the same parameter).
OracleReply query_subg(const DirDiffFunction& f, const Vector& x, const Vector& d,
                       RngStream& rng);

/// Unbiased gradient oracle for a smooth function: returns the true gradient
/// plus isotropic Gaussian noise with total variance exactly noise_variance_C.
struct InexactGradOracle {
    SmoothFunction f;
    double noise_variance_C = 0.0;
};
Vector query_inexact(const InexactGradOracle& o, const Vector& y, RngStream& rng);

/// Wraps an objective (or a raw reply strategy) into a single oracle regime
/// with exact call counting, an owned noise stream, and an optional call
/// budget. Single owner per solver run; independent runs use independent
/// instances and streams. Querying outside the constructed regime is a
/// contract violation.
class CountingOracle {
  public:
    CountingOracle(DirDiffFunction f, OracleRegime regime, RngStream noise_rng);
    /// Raw reply strategy (resisting oracles); replies must respect the
    /// regime's value-access rule.
    CountingOracle(std::function<OracleReply(const Vector&, const Vector&)> reply,
                   OracleRegime regime, FunctionClassSpec spec);

    OracleReply det(const Vector& x, const Vector& d);
    GradOnlyReply sto(const Vector& x, const Vector& d);
    OracleReply subg(const Vector& x, const Vector& d);

    long long calls() const { return calls_; }
    OracleRegime regime() const { return regime_; }
    const FunctionClassSpec& spec() const { return spec_; }

    /// Negative budget = unlimited.
    void set_budget(long long max_calls) { budget_ = max_calls; }
    bool budget_left(long long needed = 1) const {
        return budget_ < 0 || calls_ + needed <= budget_;
    }

  private:
    OracleReply raw(const Vector& x, const Vector& d);

    std::shared_ptr<DirDiffFunction> fn_;
    std::function<OracleReply(const Vector&, const Vector&)> reply_;
    OracleRegime regime_;
    FunctionClassSpec spec_;
    std::optional<RngStream> rng_;
    long long calls_ = 0;
    long long budget_ = -1;
};

}  // namespace nsopt
