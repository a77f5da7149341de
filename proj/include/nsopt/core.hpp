#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsopt {

/// Dense coordinate vector; the ambient optimization variable.
using Vector = std::vector<double>;

/// Thrown when a caller breaks a documented precondition.
struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

double dot(const Vector& a, const Vector& b);
double norm_sq(const Vector& v);
double norm(const Vector& v);
bool all_finite(const Vector& v);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scaled(const Vector& v, double c);
/// y += a * x
void axpy(Vector& y, double a, const Vector& x);

/// Parameters of the function class an objective claims to live in:
/// Lipschitz constant, initial suboptimality gap, and the noise levels of
/// the stochastic oracle regimes.
struct FunctionClassSpec {
    double lipschitz_L = 1.0;
    double gap_Delta = 1.0;
    double variance_sigma2 = 0.0;  // finite-variance gradient oracle
    double subg_sigma_f = 0.0;     // sub-Gaussian value noise
    double subg_sigma_g = 0.0;     // sub-Gaussian gradient noise

    void validate() const;
};

/// Counter-based pseudo-random stream. Every draw is a pure function of
/// (seed, stream_id, counter), so replaying a (seed, stream_id) pair
/// reproduces a run bit-exactly and disjoint stream ids give independent
/// streams for parallel trials. The generator is a SplitMix64-style
/// finalizer over a per-stream key plus a Weyl-sequence counter; it is
/// frozen here and must not change without bumping report schemas.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    /// Uniform on the closed interval [0, 1].
    double u01();
    /// Standard normal via Box-Muller (two uniforms per draw, no caching).
    double normal();
    /// Uniform index in {0, ..., n-1}; n >= 1.
    std::size_t index(std::size_t n);
    /// Isotropic Gaussian with the given total variance (per-coordinate
    /// variance total/n).
    Vector gaussian(std::size_t n, double total_variance);
    /// Uniform direction on the unit sphere in dimension n.
    Vector sphere_direction(std::size_t n);
    /// Uniform point in the closed ball of the given radius around center.
    Vector ball_point(const Vector& center, double radius);

    /// Independent stream derived from this one; tags need only be unique
    /// per parent.
    RngStream substream(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// x + u * (y - x) for an explicit interpolation weight.
Vector segment_point(const Vector& x, const Vector& y, double u);

/// Uniform sample from the closed segment [x, y]; advances rng by one draw.
Vector segment_sample(const Vector& x, const Vector& y, RngStream& rng);

}  // namespace nsopt
