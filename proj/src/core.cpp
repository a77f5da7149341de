#include "nsopt/core.hpp"

#include <cassert>
#include <cmath>

namespace nsopt {

double dot(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_sq(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double norm(const Vector& v) { return std::sqrt(norm_sq(v)); }

bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

Vector add(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "add: dimension mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector sub(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "sub: dimension mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector scaled(const Vector& v, double c) {
    Vector r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = c * v[i];
    return r;
}

void axpy(Vector& y, double a, const Vector& x) {
    require(y.size() == x.size(), "axpy: dimension mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void FunctionClassSpec::validate() const {
    require(lipschitz_L > 0.0, "FunctionClassSpec: lipschitz_L must be positive");
    require(gap_Delta > 0.0, "FunctionClassSpec: gap_Delta must be positive");
    require(variance_sigma2 >= 0.0, "FunctionClassSpec: variance_sigma2 must be nonnegative");
    require(subg_sigma_f >= 0.0 && subg_sigma_g >= 0.0,
            "FunctionClassSpec: sub-Gaussian noise levels must be nonnegative");
}

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ull;
constexpr double kInvMantissaClosed = 1.0 / 9007199254740991.0;  // 2^53 - 1
constexpr double kInvMantissaOpen = 1.0 / 9007199254740992.0;    // 2^53

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(mix64(mix64(seed) ^ (stream_id * kWeyl + 1))) {}

std::uint64_t RngStream::next_u64() { return mix64(key_ + (++counter_) * kWeyl); }

double RngStream::u01() { return double(next_u64() >> 11) * kInvMantissaClosed; }

double RngStream::normal() {
    // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
    double u1 = double((next_u64() >> 11) + 1) * kInvMantissaOpen;
    double u2 = double(next_u64() >> 11) * kInvMantissaOpen;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::size_t RngStream::index(std::size_t n) {
    require(n >= 1, "RngStream::index: n must be >= 1");
    return std::size_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

Vector RngStream::gaussian(std::size_t n, double total_variance) {
    require(total_variance >= 0.0, "RngStream::gaussian: variance must be nonnegative");
    Vector v(n, 0.0);
    if (total_variance == 0.0) return v;
    const double s = std::sqrt(total_variance / double(n));
    for (auto& x : v) x = s * normal();
    return v;
}

Vector RngStream::sphere_direction(std::size_t n) {
    Vector v(n);
    double r = 0.0;
    do {
        for (auto& x : v) x = normal();
        r = norm(v);
    } while (r == 0.0);
    return scaled(v, 1.0 / r);
}

Vector RngStream::ball_point(const Vector& center, double radius) {
    require(radius >= 0.0, "RngStream::ball_point: radius must be nonnegative");
    const std::size_t n = center.size();
    Vector dir = sphere_direction(n);
    const double r = radius * std::pow(u01(), 1.0 / double(n));
    Vector p = center;
    axpy(p, r, dir);
    return p;
}

RngStream RngStream::substream(std::uint64_t tag) const {
    return RngStream(seed_, mix64(stream_id_ * kWeyl + 0x5851F42D4C957F2Dull) ^ tag);
}

Vector segment_point(const Vector& x, const Vector& y, double u) {
    require(x.size() == y.size(), "segment_point: dimension mismatch");
    Vector p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = x[i] + u * (y[i] - x[i]);
    return p;
}

Vector segment_sample(const Vector& x, const Vector& y, RngStream& rng) {
    require(all_finite(x) && all_finite(y), "segment_sample: inputs must be finite");
    return segment_point(x, y, rng.u01());
}

}  // namespace nsopt
