#include "nsopt/oracles.hpp"

#include <cassert>
#include <cmath>
#include <memory>

namespace nsopt {

namespace {

// Zero-direction queries probe with e1; any selection satisfies the oracle
// contract there.
Vector effective_direction(const Vector& d, std::size_t dim) {
    if (d.size() == dim && norm_sq(d) > 0.0) return d;
    Vector e(dim, 0.0);
    e[0] = 1.0;
    return e;
}

}  // namespace

const char* to_string(OracleRegime r) {
    switch (r) {
        case OracleRegime::Deterministic: return "deterministic";
        case OracleRegime::FiniteVariance: return "stochastic";
        case OracleRegime::SubGaussian: return "subgaussian";
    }
    return "unknown";
}

OracleReply query_det(const DirDiffFunction& f, const Vector& x, const Vector& d) {
    const Vector dir = effective_direction(d, x.size());
    OracleReply r;
    r.value = f.eval(x);
    r.gradient = f.grad_select(x, dir);
    assert(norm(r.gradient) <= f.spec.lipschitz_L * (1.0 + 1e-9));
    return r;
}

GradOnlyReply query_sto(const DirDiffFunction& f, const Vector& x, const Vector& d,
                        RngStream& rng) {
    const Vector dir = effective_direction(d, x.size());
    Vector g = f.grad_select(x, dir);
    if (f.spec.variance_sigma2 > 0.0) {
        const Vector noise = rng.gaussian(g.size(), f.spec.variance_sigma2);
        axpy(g, 1.0, noise);
    }
    return {std::move(g)};
}

OracleReply query_subg(const DirDiffFunction& f, const Vector& x, const Vector& d,
                       RngStream& rng) {
    const Vector dir = effective_direction(d, x.size());
    OracleReply r;
    double v = f.eval(x);
    if (f.spec.subg_sigma_f > 0.0) v += f.spec.subg_sigma_f * rng.normal();
    r.value = v;
    r.gradient = f.grad_select(x, dir);
    if (f.spec.subg_sigma_g > 0.0) {
        const Vector noise =
            rng.gaussian(r.gradient.size(), f.spec.subg_sigma_g * f.spec.subg_sigma_g);
        axpy(r.gradient, 1.0, noise);
    }
    return r;
}

Vector query_inexact(const InexactGradOracle& o, const Vector& y, RngStream& rng) {
    require(o.noise_variance_C >= 0.0, "query_inexact: noise variance must be nonnegative");
    Vector g = o.f.true_gradient(y);
    if (o.noise_variance_C > 0.0) {
        const Vector noise = rng.gaussian(g.size(), o.noise_variance_C);
        axpy(g, 1.0, noise);
    }
    return g;
}

CountingOracle::CountingOracle(DirDiffFunction f, OracleRegime regime, RngStream noise_rng)
    : regime_(regime), spec_(f.spec), rng_(noise_rng) {
    fn_ = std::make_shared<DirDiffFunction>(std::move(f));
}

CountingOracle::CountingOracle(std::function<OracleReply(const Vector&, const Vector&)> reply,
                               OracleRegime regime, FunctionClassSpec spec)
    : reply_(std::move(reply)), regime_(regime), spec_(spec) {}

OracleReply CountingOracle::raw(const Vector& x, const Vector& d) {
    require(budget_left(), "CountingOracle: call budget exhausted");
    ++calls_;
    if (!fn_) return reply_(x, d);
    switch (regime_) {
        case OracleRegime::Deterministic: return query_det(*fn_, x, d);
        case OracleRegime::FiniteVariance: {
            auto g = query_sto(*fn_, x, d, *rng_);
            return {std::nullopt, std::move(g.gradient)};
        }
        case OracleRegime::SubGaussian: return query_subg(*fn_, x, d, *rng_);
    }
    throw ContractViolation("CountingOracle: bad regime");
}

OracleReply CountingOracle::det(const Vector& x, const Vector& d) {
    require(regime_ == OracleRegime::Deterministic,
            "CountingOracle: value access requires the deterministic regime");
    return raw(x, d);
}

GradOnlyReply CountingOracle::sto(const Vector& x, const Vector& d) {
    require(regime_ == OracleRegime::FiniteVariance,
            "CountingOracle: gradient-only queries require the finite-variance regime");
    return {raw(x, d).gradient};
}

OracleReply CountingOracle::subg(const Vector& x, const Vector& d) {
    require(regime_ == OracleRegime::SubGaussian,
            "CountingOracle: noisy value access requires the sub-Gaussian regime");
    return raw(x, d);
}

}  // namespace nsopt
