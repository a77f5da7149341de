#include "nsopt/functions.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace nsopt {

namespace {

constexpr double kActiveTol = 1e-12;  // absolute gap to the max piece value
constexpr double kQuadBoxRadius = 8.0;

// Piece index for x: slopes[i] applies on [breaks[i-1], breaks[i]].
std::size_t piece_of(const std::vector<double>& breaks, double x) {
    return std::size_t(std::upper_bound(breaks.begin(), breaks.end(), x) - breaks.begin());
}

double sign_or(double x, double fallback) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return fallback;
}

}  // namespace

PiecewiseLinear1D::PiecewiseLinear1D(std::vector<double> breaks, std::vector<double> slopes,
                                     double anchor_x, double anchor_value)
    : breaks_(std::move(breaks)), slopes_(std::move(slopes)) {
    require(!breaks_.empty(), "PiecewiseLinear1D: needs at least one breakpoint");
    require(slopes_.size() == breaks_.size() + 1,
            "PiecewiseLinear1D: slopes.size() must equal breaks.size() + 1");
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
        require(breaks_[i] < breaks_[i + 1], "PiecewiseLinear1D: breakpoints must be ascending");
    require(std::isfinite(anchor_x) && std::isfinite(anchor_value),
            "PiecewiseLinear1D: anchor must be finite");

    break_values_.resize(breaks_.size());
    const std::size_t pa = piece_of(breaks_, anchor_x);
    double v = anchor_value;
    double xc = anchor_x;
    for (std::size_t j = pa; j < breaks_.size(); ++j) {
        v += slopes_[j] * (breaks_[j] - xc);
        break_values_[j] = v;
        xc = breaks_[j];
    }
    v = anchor_value;
    xc = anchor_x;
    for (std::size_t j = pa; j-- > 0;) {
        v -= slopes_[j + 1] * (xc - breaks_[j]);
        break_values_[j] = v;
        xc = breaks_[j];
    }
}

double PiecewiseLinear1D::value(double x) const {
    const std::size_t idx = piece_of(breaks_, x);
    if (idx == 0) return break_values_[0] + slopes_[0] * (x - breaks_[0]);
    return break_values_[idx - 1] + slopes_[idx] * (x - breaks_[idx - 1]);
}

double PiecewiseLinear1D::dir_deriv(double x, double d) const {
    if (d == 0.0) return 0.0;
    if (d > 0.0) return slopes_[piece_of(breaks_, x)] * d;
    const std::size_t lb =
        std::size_t(std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
    return slopes_[lb] * d;
}

double PiecewiseLinear1D::grad_select(double x, double d) const {
    const double dd = (d != 0.0) ? d : 1.0;
    if (dd > 0.0) return slopes_[piece_of(breaks_, x)];
    const std::size_t lb =
        std::size_t(std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
    return slopes_[lb];
}

double PiecewiseLinear1D::max_abs_slope() const {
    double m = 0.0;
    for (double s : slopes_) m = std::max(m, std::abs(s));
    return m;
}

double PiecewiseLinear1D::min_value() const {
    require(slopes_.front() < 0.0 && slopes_.back() > 0.0,
            "PiecewiseLinear1D::min_value: function is unbounded below");
    return *std::min_element(break_values_.begin(), break_values_.end());
}

std::vector<double> PiecewiseLinear1D::stationary_points(double eps) const {
    std::vector<double> pts;
    for (std::size_t j = 0; j < breaks_.size(); ++j) {
        const double lo = std::min(slopes_[j], slopes_[j + 1]);
        const double hi = std::max(slopes_[j], slopes_[j + 1]);
        const double dist = lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0);
        if (dist <= eps) pts.push_back(breaks_[j]);
    }
    return pts;
}

DirDiffFunction PiecewiseLinear1D::to_function(FunctionClassSpec spec) const {
    auto pw = std::make_shared<PiecewiseLinear1D>(*this);
    DirDiffFunction f;
    f.dimension = 1;
    f.spec = spec;
    f.eval = [pw](const Vector& x) { return pw->value(x.at(0)); };
    f.dir_deriv = [pw](const Vector& x, const Vector& d) {
        return pw->dir_deriv(x.at(0), d.at(0));
    };
    f.grad_select = [pw](const Vector& x, const Vector& d) {
        return Vector{pw->grad_select(x.at(0), d.at(0))};
    };
    return f;
}

DirDiffFunction make_abs(double center) {
    DirDiffFunction f;
    f.dimension = 1;
    f.spec.lipschitz_L = 1.0;
    f.spec.gap_Delta = 1.0;
    f.eval = [center](const Vector& x) { return std::abs(x.at(0) - center); };
    f.dir_deriv = [center](const Vector& x, const Vector& d) {
        const double r = x.at(0) - center;
        if (r != 0.0) return sign_or(r, 0.0) * d.at(0);
        return std::abs(d.at(0));
    };
    f.grad_select = [center](const Vector& x, const Vector& d) {
        const double r = x.at(0) - center;
        if (r != 0.0) return Vector{sign_or(r, 0.0)};
        return Vector{sign_or(d.at(0), 1.0)};
    };
    return f;
}

DirDiffFunction make_neg_abs(double center) {
    DirDiffFunction f;
    f.dimension = 1;
    f.spec.lipschitz_L = 1.0;
    f.spec.gap_Delta = 1.0;
    f.eval = [center](const Vector& x) { return -std::abs(x.at(0) - center); };
    f.dir_deriv = [center](const Vector& x, const Vector& d) {
        const double r = x.at(0) - center;
        if (r != 0.0) return -sign_or(r, 0.0) * d.at(0);
        return -std::abs(d.at(0));
    };
    f.grad_select = [center](const Vector& x, const Vector& d) {
        const double r = x.at(0) - center;
        if (r != 0.0) return Vector{-sign_or(r, 0.0)};
        return Vector{-sign_or(d.at(0), 1.0)};
    };
    return f;
}

DirDiffFunction make_max_affine(const std::vector<Vector>& slopes,
                                const std::vector<double>& offsets) {
    require(!slopes.empty(), "make_max_affine: needs at least one affine piece");
    require(slopes.size() == offsets.size(), "make_max_affine: slopes/offsets size mismatch");
    const std::size_t dim = slopes.front().size();
    require(dim >= 1, "make_max_affine: pieces must have dimension >= 1");
    for (const auto& a : slopes)
        require(a.size() == dim, "make_max_affine: all pieces must share one dimension");

    struct Pieces {
        std::vector<Vector> a;
        std::vector<double> b;
    };
    auto p = std::make_shared<Pieces>(Pieces{slopes, offsets});

    auto values = [p](const Vector& x) {
        std::vector<double> v(p->a.size());
        for (std::size_t i = 0; i < p->a.size(); ++i) v[i] = dot(p->a[i], x) + p->b[i];
        return v;
    };
    // Lowest index attaining max <a_i, d> over the active set.
    auto select = [p, values](const Vector& x, const Vector& d) {
        const auto v = values(x);
        const double vmax = *std::max_element(v.begin(), v.end());
        double best = 0.0;
        std::size_t best_i = 0;
        bool found = false;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < vmax - kActiveTol) continue;
            const double s = dot(p->a[i], d);
            if (!found || s > best) {
                best = s;
                best_i = i;
                found = true;
            }
        }
        return std::pair<std::size_t, double>{best_i, best};
    };

    double L = 0.0;
    for (const auto& a : slopes) L = std::max(L, norm(a));

    DirDiffFunction f;
    f.dimension = int(dim);
    f.spec.lipschitz_L = std::max(L, 1e-300);
    f.spec.gap_Delta = 1.0;
    f.eval = [values](const Vector& x) {
        const auto v = values(x);
        return *std::max_element(v.begin(), v.end());
    };
    f.dir_deriv = [select](const Vector& x, const Vector& d) { return select(x, d).second; };
    f.grad_select = [p, select](const Vector& x, const Vector& d) {
        return p->a[select(x, d).first];
    };
    return f;
}

DirDiffFunction make_relu() {
    return make_max_affine({Vector{0.0}, Vector{1.0}}, {0.0, 0.0});
}

PiecewiseLinear1D zigzag_profile(std::vector<double> knots, double theta, double L,
                                 double delta_sep) {
    require(theta > 0.0 && theta < 0.5, "zigzag: theta must lie in (0, 1/2)");
    require(L > 0.0, "zigzag: L must be positive");
    require(delta_sep > 0.0, "zigzag: delta_sep must be positive");
    require(!knots.empty(), "zigzag: needs at least one knot");
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    const double shift = theta * delta_sep;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        require(shift < 0.5 * (knots[k + 1] - knots[k]),
                "zigzag: theta*delta_sep must stay below half the smallest knot gap");

    // Minima at knot - shift, maxima at midpoints - shift; slope +L at knots.
    std::vector<double> breaks;
    std::vector<double> slopes;
    slopes.push_back(-L);
    for (std::size_t k = 0; k < knots.size(); ++k) {
        breaks.push_back(knots[k] - shift);
        slopes.push_back(L);
        if (k + 1 < knots.size()) {
            breaks.push_back(0.5 * (knots[k] + knots[k + 1]) - shift);
            slopes.push_back(-L);
        }
    }
    return PiecewiseLinear1D(std::move(breaks), std::move(slopes), knots.front(), 0.0);
}

DirDiffFunction make_zigzag(const std::vector<double>& knots, double theta, double L,
                            double delta_sep) {
    FunctionClassSpec spec;
    spec.lipschitz_L = L;
    spec.gap_Delta = L * theta * delta_sep;
    return zigzag_profile(knots, theta, L, delta_sep).to_function(spec);
}

namespace {

// Lower-triangular Cholesky factor; throws if the matrix is not SPD.
std::vector<Vector> cholesky(const std::vector<Vector>& Q) {
    const std::size_t n = Q.size();
    std::vector<Vector> C(n, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = Q[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= C[i][k] * C[j][k];
            if (i == j) {
                require(s > 0.0, "make_quadratic: Q must be symmetric positive definite");
                C[i][i] = std::sqrt(s);
            } else {
                C[i][j] = s / C[j][j];
            }
        }
    }
    return C;
}

Vector cholesky_solve(const std::vector<Vector>& C, const Vector& b) {
    const std::size_t n = C.size();
    Vector y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= C[i][k] * y[k];
        y[i] = s / C[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= C[k][i] * x[k];
        x[i] = s / C[i][i];
    }
    return x;
}

// Extreme eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
std::pair<double, double> sym_eig_extremes(std::vector<Vector> A) {
    const std::size_t n = A.size();
    if (n == 1) return {A[0][0], A[0][0]};
    double scale = 0.0;
    for (const auto& row : A)
        for (double v : row) scale = std::max(scale, std::abs(v));
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(A[p][q]));
        if (off <= 1e-14 * std::max(scale, 1e-300)) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(A[p][q]) <= 1e-300) continue;
                const double tau = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
                const double t = sign_or(tau, 1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    double lo = A[0][0], hi = A[0][0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, A[i][i]);
        hi = std::max(hi, A[i][i]);
    }
    return {lo, hi};
}

}  // namespace

double quadratic_box_radius() { return kQuadBoxRadius; }

SmoothFunction make_quadratic(const std::vector<Vector>& Q, const Vector& b,
                              std::optional<double> mu, std::optional<double> L) {
    const std::size_t n = Q.size();
    require(n >= 1 && b.size() == n, "make_quadratic: Q/b dimension mismatch");
    for (const auto& row : Q)
        require(row.size() == n, "make_quadratic: Q must be square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            require(std::abs(Q[i][j] - Q[j][i]) <= 1e-12 * std::max(1.0, std::abs(Q[i][j])),
                    "make_quadratic: Q must be symmetric");

    const auto C = cholesky(Q);
    const Vector x_star = cholesky_solve(C, b);

    double lam_min, lam_max;
    if (mu && L) {
        lam_min = *mu;
        lam_max = *L;
    } else {
        std::tie(lam_min, lam_max) = sym_eig_extremes(Q);
        if (mu) lam_min = *mu;
        if (L) lam_max = *L;
    }
    require(lam_min > 0.0 && lam_max >= lam_min, "make_quadratic: invalid curvature bounds");

    auto Qp = std::make_shared<std::vector<Vector>>(Q);
    auto bp = std::make_shared<Vector>(b);
    auto grad = [Qp, bp](const Vector& x) {
        const std::size_t m = Qp->size();
        require(x.size() == m, "quadratic: dimension mismatch");
        Vector g(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double s = -(*bp)[i];
            for (std::size_t j = 0; j < m; ++j) s += (*Qp)[i][j] * x[j];
            g[i] = s;
        }
        return g;
    };

    SmoothFunction sf;
    sf.f.dimension = int(n);
    sf.f.spec.lipschitz_L = lam_max * kQuadBoxRadius + norm(b);
    sf.f.spec.gap_Delta = 0.5 * lam_max * (kQuadBoxRadius + norm(x_star)) *
                          (kQuadBoxRadius + norm(x_star));
    sf.f.eval = [Qp, bp](const Vector& x) {
        const std::size_t m = Qp->size();
        require(x.size() == m, "quadratic: dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double qx = 0.0;
            for (std::size_t j = 0; j < m; ++j) qx += (*Qp)[i][j] * x[j];
            s += 0.5 * x[i] * qx - (*bp)[i] * x[i];
        }
        return s;
    };
    sf.f.dir_deriv = [grad](const Vector& x, const Vector& d) { return dot(grad(x), d); };
    sf.f.grad_select = [grad](const Vector& x, const Vector&) { return grad(x); };
    sf.true_gradient = grad;
    sf.grad_lipschitz = lam_max;
    sf.strong_convexity = lam_min;
    sf.minimizer = x_star;
    sf.min_value = sf.f.eval(x_star);
    return sf;
}

namespace {

struct MlpShape {
    std::vector<int> dims;
    bool with_bias = true;
    std::vector<std::size_t> w_off;  // per layer: start of the weight matrix
    std::size_t total = 0;

    MlpShape(const std::vector<int>& layer_dims, bool bias) : dims(layer_dims), with_bias(bias) {
        require(dims.size() >= 2, "make_relu_mlp: need at least input and output layer dims");
        for (int d : dims) require(d >= 1, "make_relu_mlp: layer dims must be positive");
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            w_off.push_back(total);
            total += std::size_t(dims[l + 1]) * std::size_t(dims[l]);
            if (with_bias) total += std::size_t(dims[l + 1]);
        }
    }
    std::size_t layers() const { return dims.size() - 1; }
    double weight(const Vector& w, std::size_t l, int i, int j) const {
        return w[w_off[l] + std::size_t(i) * std::size_t(dims[l]) + std::size_t(j)];
    }
    double bias(const Vector& w, std::size_t l, int i) const {
        return with_bias ? w[w_off[l] + std::size_t(dims[l + 1]) * std::size_t(dims[l]) +
                             std::size_t(i)]
                         : 0.0;
    }
    std::size_t widx(std::size_t l, int i, int j) const {
        return w_off[l] + std::size_t(i) * std::size_t(dims[l]) + std::size_t(j);
    }
    std::size_t bidx(std::size_t l, int i) const {
        return w_off[l] + std::size_t(dims[l + 1]) * std::size_t(dims[l]) + std::size_t(i);
    }
};

// One pass over the dataset. dw selects the forward tangent (and the kink
// resolution for grad_out); both are optional.
double mlp_run(const MlpShape& sh, const std::vector<std::pair<Vector, Vector>>& data,
               const Vector& w, const Vector* dw, double* dloss_out, Vector* grad_out) {
    const std::size_t M = sh.layers();
    double loss = 0.0, dloss = 0.0;
    if (grad_out) grad_out->assign(sh.total, 0.0);

    for (const auto& [input, target] : data) {
        std::vector<Vector> h(M + 1), th(M + 1);
        std::vector<std::vector<char>> mask(M);
        h[0] = input;
        th[0].assign(input.size(), 0.0);
        for (std::size_t l = 0; l < M; ++l) {
            const int out = sh.dims[l + 1], in = sh.dims[l];
            Vector z(out, 0.0), tz(out, 0.0);
            for (int i = 0; i < out; ++i) {
                double s = sh.bias(w, l, i), ts = 0.0;
                for (int j = 0; j < in; ++j) {
                    const double wij = sh.weight(w, l, i, j);
                    s += wij * h[l][j];
                    if (dw) {
                        ts += (*dw)[sh.widx(l, i, j)] * h[l][j] + wij * th[l][j];
                    }
                }
                if (dw && sh.with_bias) ts += (*dw)[sh.bidx(l, i)];
                z[i] = s;
                tz[i] = ts;
            }
            if (l + 1 < M) {
                mask[l].assign(out, 0);
                h[l + 1].assign(out, 0.0);
                th[l + 1].assign(out, 0.0);
                for (int i = 0; i < out; ++i) {
                    const bool active = z[i] > 0.0 || (z[i] == 0.0 && tz[i] > 0.0);
                    mask[l][i] = active ? 1 : 0;
                    if (z[i] > 0.0) h[l + 1][i] = z[i];
                    if (active) th[l + 1][i] = tz[i];
                }
            } else {
                h[l + 1] = z;
                th[l + 1] = tz;
            }
        }
        const Vector r = sub(h[M], target);
        loss += norm_sq(r);
        dloss += 2.0 * dot(r, th[M]);

        if (grad_out) {
            Vector delta = scaled(r, 2.0);  // d(sample loss)/d h[M]
            for (std::size_t l = M; l-- > 0;) {
                const int out = sh.dims[l + 1], in = sh.dims[l];
                Vector dz = delta;
                if (l + 1 < M)
                    for (int i = 0; i < out; ++i)
                        if (!mask[l][i]) dz[i] = 0.0;
                Vector dh(in, 0.0);
                for (int i = 0; i < out; ++i) {
                    for (int j = 0; j < in; ++j) {
                        (*grad_out)[sh.widx(l, i, j)] += dz[i] * h[l][j];
                        dh[j] += sh.weight(w, l, i, j) * dz[i];
                    }
                    if (sh.with_bias) (*grad_out)[sh.bidx(l, i)] += dz[i];
                }
                delta = std::move(dh);
            }
        }
    }
    const double inv_n = 1.0 / double(data.size());
    loss *= inv_n;
    dloss *= inv_n;
    if (grad_out)
        for (auto& g : *grad_out) g *= inv_n;
    if (dloss_out) *dloss_out = dloss;
    return loss;
}

// Lipschitz bound for the loss on the unit ball around w0 in weight space.
double mlp_lipschitz_bound(const MlpShape& sh, const std::vector<std::pair<Vector, Vector>>& data,
                           const Vector& w0) {
    const double R = 1.0;
    double b_in = 0.0, y_max = 0.0;
    for (const auto& [input, target] : data) {
        b_in = std::max(b_in, norm(input));
        y_max = std::max(y_max, norm(target));
    }
    const std::size_t M = sh.layers();
    std::vector<double> wf(M, 0.0), bf(M, 0.0), B(M + 1, 0.0);
    B[0] = b_in;
    for (std::size_t l = 0; l < M; ++l) {
        double s = 0.0, sb = 0.0;
        for (int i = 0; i < sh.dims[l + 1]; ++i) {
            for (int j = 0; j < sh.dims[l]; ++j) s += sh.weight(w0, l, i, j) * sh.weight(w0, l, i, j);
            sb += sh.bias(w0, l, i) * sh.bias(w0, l, i);
        }
        wf[l] = std::sqrt(s);
        bf[l] = std::sqrt(sb);
        B[l + 1] = (wf[l] + R) * B[l] + bf[l] + R;
    }
    std::vector<double> D(M + 1, 0.0);
    D[M] = 2.0 * (B[M] + y_max);
    for (std::size_t l = M; l-- > 0;) D[l] = (wf[l] + R) * D[l + 1];
    double total = 0.0;
    for (std::size_t l = 0; l < M; ++l) total += D[l + 1] * D[l + 1] * (B[l] * B[l] + 1.0);
    return std::sqrt(total);
}

}  // namespace

DirDiffFunction make_relu_mlp(const std::vector<int>& layer_dims, const Vector& weights,
                              const std::vector<std::pair<Vector, Vector>>& data,
                              bool with_bias) {
    auto sh = std::make_shared<MlpShape>(layer_dims, with_bias);
    require(weights.size() == sh->total, "make_relu_mlp: weight vector length mismatch");
    require(!data.empty(), "make_relu_mlp: needs at least one data point");
    for (const auto& [input, target] : data) {
        require(int(input.size()) == layer_dims.front(), "make_relu_mlp: input shape mismatch");
        require(int(target.size()) == layer_dims.back(), "make_relu_mlp: target shape mismatch");
    }
    auto dp = std::make_shared<std::vector<std::pair<Vector, Vector>>>(data);

    DirDiffFunction f;
    f.dimension = int(sh->total);
    f.spec.lipschitz_L = mlp_lipschitz_bound(*sh, data, weights);
    f.spec.gap_Delta = std::max(mlp_run(*sh, data, weights, nullptr, nullptr, nullptr), 1e-9);
    f.eval = [sh, dp](const Vector& w) {
        require(w.size() == sh->total, "relu_mlp: weight vector length mismatch");
        return mlp_run(*sh, *dp, w, nullptr, nullptr, nullptr);
    };
    f.dir_deriv = [sh, dp](const Vector& w, const Vector& dw) {
        require(w.size() == sh->total && dw.size() == sh->total,
                "relu_mlp: weight vector length mismatch");
        double dloss = 0.0;
        mlp_run(*sh, *dp, w, &dw, &dloss, nullptr);
        return dloss;
    };
    f.grad_select = [sh, dp](const Vector& w, const Vector& dw) {
        require(w.size() == sh->total, "relu_mlp: weight vector length mismatch");
        Vector dir = dw;
        if (dir.size() != sh->total || norm(dir) == 0.0) {
            dir.assign(sh->total, 0.0);
            dir[0] = 1.0;  // canonical probe
        }
        Vector g;
        mlp_run(*sh, *dp, w, &dir, nullptr, &g);
        return g;
    };
    return f;
}

DirDiffFunction compose(const DirDiffFunction& outer, const DirDiffMap& inner) {
    require(inner.output_dim == outer.dimension,
            "compose: inner output dimension must match outer input dimension");
    DirDiffFunction f;
    f.dimension = inner.input_dim;
    f.spec = outer.spec;
    f.spec.lipschitz_L = outer.spec.lipschitz_L * inner.lipschitz;
    f.eval = [outer, inner](const Vector& x) { return outer.eval(inner.eval(x)); };
    f.dir_deriv = [outer, inner](const Vector& x, const Vector& d) {
        return outer.dir_deriv(inner.eval(x), inner.dir_deriv(x, d));
    };
    f.grad_select = [outer, inner](const Vector& x, const Vector& d) {
        const Vector ix = inner.eval(x);
        const Vector id = inner.dir_deriv(x, d);
        return inner.pullback(x, d, outer.grad_select(ix, id));
    };
    return f;
}

DirDiffMap linear_map(const std::vector<Vector>& rows) {
    require(!rows.empty(), "linear_map: needs at least one row");
    const std::size_t in = rows.front().size();
    for (const auto& r : rows) require(r.size() == in, "linear_map: ragged rows");
    auto A = std::make_shared<std::vector<Vector>>(rows);
    double fro = 0.0;
    for (const auto& r : rows) fro += norm_sq(r);

    DirDiffMap m;
    m.input_dim = int(in);
    m.output_dim = int(rows.size());
    m.lipschitz = std::sqrt(fro);
    auto apply = [A](const Vector& x) {
        Vector y(A->size());
        for (std::size_t i = 0; i < A->size(); ++i) y[i] = dot((*A)[i], x);
        return y;
    };
    m.eval = apply;
    m.dir_deriv = [apply](const Vector&, const Vector& d) { return apply(d); };
    m.pullback = [A, in](const Vector&, const Vector&, const Vector& w) {
        require(w.size() == A->size(), "linear_map: pullback dimension mismatch");
        Vector g(in, 0.0);
        for (std::size_t i = 0; i < A->size(); ++i) axpy(g, w[i], (*A)[i]);
        return g;
    };
    return m;
}

DirDiffMap scale_map(int dim, double c) {
    DirDiffMap m;
    m.input_dim = dim;
    m.output_dim = dim;
    m.lipschitz = std::abs(c);
    m.eval = [c](const Vector& x) { return scaled(x, c); };
    m.dir_deriv = [c](const Vector&, const Vector& d) { return scaled(d, c); };
    m.pullback = [c](const Vector&, const Vector&, const Vector& w) { return scaled(w, c); };
    return m;
}

DirDiffMap relu_map(int dim) {
    DirDiffMap m;
    m.input_dim = dim;
    m.output_dim = dim;
    m.lipschitz = 1.0;
    m.eval = [](const Vector& x) {
        Vector y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(x[i], 0.0);
        return y;
    };
    m.dir_deriv = [](const Vector& x, const Vector& d) {
        Vector y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = x[i] > 0.0 ? d[i] : (x[i] == 0.0 ? std::max(d[i], 0.0) : 0.0);
        return y;
    };
    m.pullback = [](const Vector& x, const Vector& d, const Vector& w) {
        Vector g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool active = x[i] > 0.0 || (x[i] == 0.0 && d[i] > 0.0);
            g[i] = active ? w[i] : 0.0;
        }
        return g;
    };
    return m;
}

DirDiffMap abs_map(int dim) {
    DirDiffMap m;
    m.input_dim = dim;
    m.output_dim = dim;
    m.lipschitz = 1.0;
    m.eval = [](const Vector& x) {
        Vector y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::abs(x[i]);
        return y;
    };
    m.dir_deriv = [](const Vector& x, const Vector& d) {
        Vector y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = x[i] != 0.0 ? sign_or(x[i], 0.0) * d[i] : std::abs(d[i]);
        return y;
    };
    m.pullback = [](const Vector& x, const Vector& d, const Vector& w) {
        Vector g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = x[i] != 0.0 ? sign_or(x[i], 0.0) : sign_or(d[i], 1.0);
            g[i] = s * w[i];
        }
        return g;
    };
    return m;
}

namespace {

using nlohmann::json;

Vector vec_of(const json& j) { return j.get<Vector>(); }

std::vector<Vector> mat_of(const json& j) {
    std::vector<Vector> rows;
    for (const auto& r : j) rows.push_back(vec_of(r));
    return rows;
}

void apply_spec_overrides(FunctionClassSpec& spec, const json& desc) {
    if (desc.contains("L")) spec.lipschitz_L = desc.at("L").get<double>();
    if (desc.contains("Delta")) spec.gap_Delta = desc.at("Delta").get<double>();
    if (desc.contains("sigma")) {
        const double s = desc.at("sigma").get<double>();
        spec.variance_sigma2 = s * s;
    }
    if (desc.contains("sigma2")) spec.variance_sigma2 = desc.at("sigma2").get<double>();
    if (desc.contains("sigma_f")) spec.subg_sigma_f = desc.at("sigma_f").get<double>();
    if (desc.contains("sigma_g")) spec.subg_sigma_g = desc.at("sigma_g").get<double>();
    spec.validate();
}

}  // namespace

DirDiffFunction function_from_json(const json& desc) {
    require(desc.is_object() && desc.contains("kind"), "function descriptor: missing 'kind'");
    const std::string kind = desc.at("kind").get<std::string>();
    DirDiffFunction f;
    if (kind == "abs") {
        f = make_abs(desc.value("center", 0.0));
    } else if (kind == "neg_abs") {
        f = make_neg_abs(desc.value("center", 0.0));
    } else if (kind == "relu") {
        f = make_relu();
    } else if (kind == "max_affine") {
        f = make_max_affine(mat_of(desc.at("slopes")), vec_of(desc.at("offsets")));
    } else if (kind == "zigzag") {
        f = make_zigzag(vec_of(desc.at("knots")), desc.at("theta").get<double>(),
                        desc.value("L", 1.0), desc.at("delta_sep").get<double>());
    } else if (kind == "quadratic") {
        f = smooth_from_json(desc).f;
    } else if (kind == "relu_mlp") {
        std::vector<std::pair<Vector, Vector>> data;
        for (const auto& item : desc.at("data"))
            data.emplace_back(vec_of(item.at("input")), vec_of(item.at("target")));
        f = make_relu_mlp(desc.at("layer_dims").get<std::vector<int>>(),
                          vec_of(desc.at("weights")), data, desc.value("with_bias", true));
    } else if (kind == "piecewise_linear") {
        PiecewiseLinear1D pw(vec_of(desc.at("breakpoints")), vec_of(desc.at("slopes")),
                             desc.at("anchor_x").get<double>(),
                             desc.at("anchor_value").get<double>());
        FunctionClassSpec spec;
        spec.lipschitz_L = pw.max_abs_slope();
        f = pw.to_function(spec);
    } else {
        throw ContractViolation("function descriptor: unknown kind '" + kind + "'");
    }
    apply_spec_overrides(f.spec, desc);
    return f;
}

SmoothFunction smooth_from_json(const json& desc) {
    require(desc.is_object() && desc.contains("kind"), "function descriptor: missing 'kind'");
    const std::string kind = desc.at("kind").get<std::string>();
    require(kind == "quadratic", "smooth descriptor: unsupported kind '" + kind + "'");
    std::optional<double> mu, L;
    if (desc.contains("mu")) mu = desc.at("mu").get<double>();
    if (desc.contains("grad_L")) L = desc.at("grad_L").get<double>();
    SmoothFunction sf = make_quadratic(mat_of(desc.at("Q")), vec_of(desc.at("b")), mu, L);
    apply_spec_overrides(sf.f.spec, desc);
    return sf;
}

json piecewise_to_json(const PiecewiseLinear1D& pw, const FunctionClassSpec& spec) {
    json j;
    j["kind"] = "piecewise_linear";
    j["breakpoints"] = pw.breaks();
    j["slopes"] = pw.slopes();
    j["anchor_x"] = pw.breaks().front();
    j["anchor_value"] = pw.value(pw.breaks().front());
    j["L"] = spec.lipschitz_L;
    j["Delta"] = spec.gap_Delta;
    return j;
}

}  // namespace nsopt
