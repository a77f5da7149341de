#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nsopt/core.hpp"
#include "nsopt/functions.hpp"

namespace nsopt {

struct CertificateAtom {
    Vector point;
    Vector gradient;
    double weight = 0.0;
};

/// Witness of (delta, epsilon)-stationarity at `center`: a convex combination
/// of gradients sampled at points within radius_delta of center whose
/// combined vector has norm at most epsilon.
struct GoldsteinCertificate {
    Vector center;
    double radius_delta = 0.0;
    std::vector<CertificateAtom> atoms;

    Vector combined() const;
};

struct CertValidation {
    bool ok = false;
    std::string diagnostic;  // first violated clause; empty when ok
    double weight_sum = 0.0;
    double max_point_distance = 0.0;
    double combined_norm = 0.0;
};

/// Checks the three certificate invariants plus ||combined|| <= epsilon + 1e-9.
/// Never throws; the diagnostic names the first violated clause.
CertValidation validate_certificate(const GoldsteinCertificate& cert, double epsilon);

struct MinNormResult {
    Vector witness;
    std::vector<double> weights;  // simplex weights over the input list
    double norm = 0.0;
};

/// Minimum-norm point of conv{gradients}, norm accurate to tol. Wolfe-style
/// major/minor cycles: grow a corral with the most violating atom, solve the
/// affine-hull minimum on it, and step back to the simplex when a weight
/// would go negative.
MinNormResult min_norm_in_hull(const std::vector<Vector>& gradients, double tol = 1e-8);

struct GoldsteinEstimate {
    double estimate = 0.0;
    GoldsteinCertificate certificate;
};

/// Upper bound on d(0, conv of gradients over the closed delta-ball at x),
/// from n_samples uniform ball points with independent sphere probe
/// directions. The certificate packages the minimizing combination.
GoldsteinEstimate approx_goldstein_distance(const DirDiffFunction& f, const Vector& x,
                                            double delta, int n_samples, RngStream& rng);

/// Verifies the smooth-equivalence implication: when the sampled Goldstein
/// distance at radius epsilon/(3 Lg) is <= epsilon/3, the true gradient norm
/// must be <= epsilon. Returns vacuous true when the premise is unmet.
bool check_smooth_equivalence(const SmoothFunction& f, const Vector& x, double epsilon,
                              RngStream& rng, int n_samples = 512);

/// Distance estimates for a strictly descending list of radii.
std::vector<double> goldstein_shrinkage_profile(const DirDiffFunction& f, const Vector& x,
                                                const std::vector<double>& deltas,
                                                int n_samples, RngStream& rng);

nlohmann::json certificate_to_json(const GoldsteinCertificate& cert);
GoldsteinCertificate certificate_from_json(const nlohmann::json& j);

}  // namespace nsopt
