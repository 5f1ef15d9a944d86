// noise.hpp — white noise sampled in the Hermite basis and the enhanced
// noise (Y, Z) driving the Anderson operator.
//
// xi has iid standard normal coefficients; Y = (-H)^{-1} xi divides each
// coefficient by its eigenvalue. Z is |grad Y|^2 evaluated spectrally, with
// the Wick subtraction of E[|grad Y_N|^2] in 2d. Each coefficient is keyed
// by (seed, global mode index), so raising the cutoff extends a realization
// without changing existing coefficients.

#pragma once

#include <cstdint>
#include <memory>

#include "agp/field.hpp"

namespace agp {

enum class RenormMode { wick, bare };

inline const char* to_string(RenormMode m) { return m == RenormMode::wick ? "wick" : "bare"; }

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// One standard normal per counter, Box-Muller on two hashed uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t base = splitmix64(seed ^ 0x7f4a7c15ull) + counter * 0x9e3779b97f4a7c15ull;
    const std::uint64_t z1 = splitmix64(base);
    const std::uint64_t z2 = splitmix64(base ^ 0xda942042e4dd58b5ull);
    const double u1 = ((z1 >> 11) + 1.0) * 0x1.0p-53;  // in (0, 1]
    const double u2 = (z2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Cutoff-independent position of a mode in the infinite graded-lex ordering.
inline std::uint64_t global_mode_index(const Basis& b, long index) {
    if (b.dim == 1) return static_cast<std::uint64_t>(index);
    const Mode k = b.mode(index);
    const std::uint64_t g = static_cast<std::uint64_t>(k[0]) + static_cast<std::uint64_t>(k[1]);
    return g * (g + 1) / 2 + static_cast<std::uint64_t>(k[0]);
}

} // namespace detail

struct NoiseRealization {
    std::uint64_t seed = 0;
    Basis basis;
    VectorXd xi;  // <xi, h_n>, iid standard normals
};

inline NoiseRealization sample_noise(std::uint64_t seed, const Basis& basis) {
    NoiseRealization r;
    r.seed = seed;
    r.basis = basis;
    r.xi.resize(basis.mode_count());
    for (long i = 0; i < basis.mode_count(); ++i)
        r.xi[i] = detail::counter_normal(seed, detail::global_mode_index(basis, i));
    return r;
}

// Same realization viewed on a larger basis. Keeping `content_cutoff` at the
// old cutoff freezes the noise content (modes above it are zero), which is
// what Galerkin self-convergence comparisons need; -1 extends the white noise
// through the counter coupling instead.
inline NoiseRealization embed_realization(const NoiseRealization& r, const Basis& larger,
                                          int content_cutoff = -1) {
    if (larger.dim != r.basis.dim || larger.cutoff < r.basis.cutoff)
        throw BasisMismatch("embed_realization: target basis must extend the source");
    NoiseRealization out = sample_noise(r.seed, larger);
    const int keep = content_cutoff < 0 ? larger.cutoff : content_cutoff;
    for (long i = 0; i < larger.mode_count(); ++i)
        if (larger.grade(i) > keep) out.xi[i] = 0.0;
    return out;
}

// Y = (-H)^{-1} xi: coefficient n is xi_n / lambda_n^2.
inline SpectralField compute_Y(const NoiseRealization& r) {
    VectorXcd c(r.basis.mode_count());
    for (long i = 0; i < r.basis.mode_count(); ++i) c[i] = r.xi[i] / r.basis.eigenvalue(i);
    return {r.basis, std::move(c)};
}

// E[|grad Y_N|^2](x) = sum_{|k|<=N} |grad h_k(x)|^2 / lambda_k^4 on a tensor
// grid of axis points (2d only). Axis-factored: with E = D.^2, F = B.^2,
// sigma = E C F^T + F C E^T where C(k1,k2) = 1/(2(k1+k2)+2)^2.
inline VectorXd wick_expectation_at(const Basis& basis, const VectorXd& axis_points) {
    if (basis.dim != 2) throw DimensionError("wick_expectation: defined in dimension 2 only");
    const int m = basis.cutoff + 1;
    const MatrixXd B = hermite_matrix(axis_points, basis.cutoff + 1);
    const MatrixXd D = hermite_derivative_matrix(B, basis.cutoff);
    const MatrixXd E = D.leftCols(m).array().square();
    const MatrixXd F = B.leftCols(m).array().square();
    MatrixXd C(m, m);
    for (int k1 = 0; k1 < m; ++k1)
        for (int k2 = 0; k2 < m; ++k2) {
            if (k1 + k2 <= basis.cutoff) {
                const double lam2 = 2.0 * (k1 + k2) + 2.0;
                C(k1, k2) = 1.0 / (lam2 * lam2);
            } else {
                C(k1, k2) = 0.0;
            }
        }
    const MatrixXd sigma = E * C * F.transpose() + F * C * E.transpose();
    const long n = axis_points.size();
    VectorXd out(n * n);
    for (long i1 = 0; i1 < n; ++i1)
        for (long i2 = 0; i2 < n; ++i2) out[i1 * n + i2] = sigma(i1, i2);
    return out;
}

inline VectorXd wick_expectation(const Basis& basis, const Grid& grid) {
    return wick_expectation_at(basis, grid.axis_nodes);
}

struct EnhancedNoise {
    NoiseRealization realization;
    SpectralField Y;
    Grid grid;
    VectorXd Y_vals;
    MatrixXd gradY_vals;  // point_count x dim
    VectorXd rho_vals;
    VectorXd rho2_vals;
    VectorXd Z_vals;
    double infY = 0.0, supY = 0.0;
    RenormMode mode = RenormMode::bare;

    const Basis& basis() const { return realization.basis; }
    int dim() const { return realization.basis.dim; }
};

inline EnhancedNoise enhance(const NoiseRealization& r, RenormMode mode) {
    if (r.basis.dim == 1 && mode == RenormMode::wick)
        throw ModeError("enhance: wick renormalization is a 2d construction; use bare in 1d");
    EnhancedNoise e;
    e.realization = r;
    e.mode = mode;
    e.Y = compute_Y(r);
    e.grid = make_grid(r.basis);
    e.Y_vals = synthesize(e.Y, e.grid).real();
    const auto grad = gradient_values(e.grid, e.Y.basis, e.Y.coeffs);
    e.gradY_vals.resize(e.grid.point_count(), r.basis.dim);
    for (int a = 0; a < r.basis.dim; ++a) e.gradY_vals.col(a) = grad[a].real();
    e.rho_vals = e.Y_vals.array().exp();
    e.rho2_vals = e.rho_vals.array().square();
    e.Z_vals = e.gradY_vals.array().square().rowwise().sum();
    if (mode == RenormMode::wick) e.Z_vals -= wick_expectation(r.basis, e.grid);
    e.infY = e.Y_vals.minCoeff();
    e.supY = e.Y_vals.maxCoeff();
    return e;
}

// Value of rho = exp(Y) at an arbitrary point (Y evaluated spectrally).
inline double rho_at(const EnhancedNoise& e, const std::array<double, 2>& x) {
    double y = 0.0;
    VectorXd c1(e.basis().cutoff + 1), c2(e.basis().cutoff + 1);
    detail::hermite_column(x[0], e.basis().cutoff, c1.data());
    if (e.dim() == 2) detail::hermite_column(x[1], e.basis().cutoff, c2.data());
    for (long i = 0; i < e.basis().mode_count(); ++i) {
        const Mode k = e.basis().mode(i);
        double h = c1[k[0]];
        if (e.dim() == 2) h *= c2[k[1]];
        y += e.Y.coeffs[i].real() * h;
    }
    return std::exp(y);
}

// Partial sums S_g = sum_{|k| <= g} (lambda_k^2)^alpha for g = 0..cutoff,
// the expected squared W^{alpha,2} mass of truncated white noise.
inline VectorXd noise_sobolev_series(const Basis& basis, double alpha) {
    VectorXd sums(basis.cutoff + 1);
    double acc = 0.0;
    for (int g = 0; g <= basis.cutoff; ++g) {
        const double mult = basis.dim == 1 ? 1.0 : g + 1.0;
        acc += mult * std::pow(2.0 * g + basis.dim, alpha);
        sums[g] = acc;
    }
    return sums;
}

} // namespace agp
