#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nsopt/core.hpp"

namespace nsopt {

/// An evaluable objective exposing its value, its Hadamard directional
/// derivative f'(x; d), and a direction-consistent generalized-gradient
/// selection: grad_select(x, d) returns some g in the generalized gradient
/// at x with <g, d> = f'(x; d). Instances are immutable after construction
/// and safe to share across threads.
struct DirDiffFunction {
    int dimension = 1;
    FunctionClassSpec spec;
    std::function<double(const Vector&)> eval;
    std::function<double(const Vector&, const Vector&)> dir_deriv;
    std::function<Vector(const Vector&, const Vector&)> grad_select;
};

/// Differentiable objective with an exact gradient map. Used by the
/// inexact-gradient oracle and the smooth-equivalence check; the quadratic
/// testbed also knows its minimizer.
struct SmoothFunction {
    DirDiffFunction f;
    std::function<Vector(const Vector&)> true_gradient;
    double grad_lipschitz = 1.0;
    double strong_convexity = 0.0;
    std::optional<Vector> minimizer;
    std::optional<double> min_value;
};

/// Vector-valued map with a Hadamard directional derivative and a pullback
/// through the linearization that is active at (x, d). Building block for
/// chain-rule composition.
struct DirDiffMap {
    int input_dim = 1;
    int output_dim = 1;
    double lipschitz = 1.0;
    std::function<Vector(const Vector&)> eval;
    std::function<Vector(const Vector&, const Vector&)> dir_deriv;
    /// A^T w for the linearization A active along direction d at x, so that
    /// A d = dir_deriv(x, d).
    std::function<Vector(const Vector&, const Vector&, const Vector&)> pullback;
};

/// Continuous piecewise-linear function of one variable: ascending
/// breakpoints, one slope per interval (slopes.size() == breaks.size() + 1),
/// anchored by its value at one point. Backs the zigzag test family and the
/// resisting-oracle witness constructions.
class PiecewiseLinear1D {
  public:
    PiecewiseLinear1D(std::vector<double> breaks, std::vector<double> slopes,
                      double anchor_x, double anchor_value);

    double value(double x) const;
    /// Hadamard directional derivative; one-sided slope in the direction of d.
    double dir_deriv(double x, double d) const;
    /// Slope of the piece active along d (d == 0 falls back to the +1 probe).
    double grad_select(double x, double d) const;

    const std::vector<double>& breaks() const { return breaks_; }
    const std::vector<double>& slopes() const { return slopes_; }
    double max_abs_slope() const;
    /// Global minimum; requires the function to be coercive on both sides.
    double min_value() const;
    /// Breakpoints whose generalized gradient interval comes within eps of 0.
    /// Pieces with |slope| <= eps are not enumerated (callers keep eps below
    /// the smallest piece slope).
    std::vector<double> stationary_points(double eps) const;

    DirDiffFunction to_function(FunctionClassSpec spec) const;

  private:
    std::vector<double> breaks_;
    std::vector<double> slopes_;
    std::vector<double> break_values_;
};

DirDiffFunction make_abs(double center = 0.0);
DirDiffFunction make_neg_abs(double center = 0.0);
DirDiffFunction make_relu();
DirDiffFunction make_max_affine(const std::vector<Vector>& slopes,
                                const std::vector<double>& offsets);

/// Piecewise-linear zigzag with value 0 and slope +L at every knot, local
/// minima of depth L*theta*delta_sep at knot - theta*delta_sep. theta in
/// (0, 1/2); theta*delta_sep must stay below half the smallest knot gap.
PiecewiseLinear1D zigzag_profile(std::vector<double> knots, double theta, double L,
                                 double delta_sep);
DirDiffFunction make_zigzag(const std::vector<double>& knots, double theta, double L,
                            double delta_sep);

/// f(x) = 1/2 <x, Qx> - <b, x> with Q symmetric positive definite (checked
/// by factorization). mu/L default to the extreme eigenvalues; the declared
/// Lipschitz constant is valid on the ball of radius quadratic_box_radius().
SmoothFunction make_quadratic(const std::vector<Vector>& Q, const Vector& b,
                              std::optional<double> mu = std::nullopt,
                              std::optional<double> L = std::nullopt);
double quadratic_box_radius();

/// Mean squared loss of a ReLU multilayer perceptron over a fixed dataset,
/// as a function of the flattened weight vector (per layer: row-major weight
/// matrix, then bias when with_bias). Directional derivatives and gradient
/// selection run forward mode through every layer, resolving ReLU kinks by
/// the sign of the incoming perturbation. The declared Lipschitz constant is
/// valid on the unit ball around the given weights.
DirDiffFunction make_relu_mlp(const std::vector<int>& layer_dims, const Vector& weights,
                              const std::vector<std::pair<Vector, Vector>>& data,
                              bool with_bias = true);

DirDiffFunction compose(const DirDiffFunction& outer, const DirDiffMap& inner);

DirDiffMap linear_map(const std::vector<Vector>& rows);
DirDiffMap scale_map(int dim, double c);
DirDiffMap relu_map(int dim);
DirDiffMap abs_map(int dim);

/// Builds a function from a JSON descriptor ({"kind": ..., parameters...}).
/// Optional keys L, Delta, sigma, sigma_f, sigma_g override the class spec.
/// See README for the schema.
DirDiffFunction function_from_json(const nlohmann::json& desc);
/// Same, for descriptors of smooth kinds (currently "quadratic").
SmoothFunction smooth_from_json(const nlohmann::json& desc);
nlohmann::json piecewise_to_json(const PiecewiseLinear1D& pw, const FunctionClassSpec& spec);

}  // namespace nsopt
