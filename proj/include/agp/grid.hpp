// grid.hpp — tensor Gauss-Hermite grid tying coefficient and physical space.
//
// The grid stores one 1d rule reused on every axis plus basis-evaluation
// matrices up to cutoff+1 (one extra mode so spectrally exact first
// derivatives stay in range). Flat node index p = i1*n + i2 in 2d.

#pragma once

#include <complex>

#include "agp/basis.hpp"

namespace agp {

struct Grid {
    Basis basis;
    VectorXd axis_nodes;
    VectorXd axis_weights;
    MatrixXd values;  // n x (cutoff+2): h_k(x_i) for k <= cutoff+1
    MatrixXd derivs;  // n x (cutoff+1): h_k'(x_i)

    int axis_count() const { return static_cast<int>(axis_nodes.size()); }
    long point_count() const {
        const long n = axis_count();
        return basis.dim == 1 ? n : n * n;
    }
    std::array<double, 2> point(long p) const {
        if (basis.dim == 1) return {axis_nodes[p], 0.0};
        const long n = axis_count();
        return {axis_nodes[p / n], axis_nodes[p % n]};
    }
    double weight(long p) const {
        if (basis.dim == 1) return axis_weights[p];
        const long n = axis_count();
        return axis_weights[p / n] * axis_weights[p % n];
    }
    // |x|^2 at node p
    double radius2(long p) const {
        const auto x = point(p);
        return x[0] * x[0] + (basis.dim == 2 ? x[1] * x[1] : 0.0);
    }
};

inline Grid make_grid(const Basis& basis) {
    Grid g;
    g.basis = basis;
    const auto rule = gauss_hermite(basis.axis_node_count());
    g.axis_nodes = rule.nodes;
    g.axis_weights = rule.weights;
    g.values = hermite_matrix(g.axis_nodes, basis.cutoff + 1);
    g.derivs = hermite_derivative_matrix(g.values, basis.cutoff);
    return g;
}

namespace detail {

inline void check_synth(const Grid& g, const Basis& fb) {
    if (g.basis.dim != fb.dim) throw DimensionError("synthesize: dimension mismatch");
    if (fb.cutoff > g.basis.cutoff + 1)
        throw AliasError("synthesize: grid built for a smaller basis");
    if (g.axis_count() < fb.cutoff + 1)
        throw AliasError("synthesize: grid too coarse for the basis");
}

// Scatter graded-lex coefficients into a dense (N+1)x(N+1) square (2d).
inline MatrixXd to_square(const Basis& b, const VectorXd& c) {
    MatrixXd sq = MatrixXd::Zero(b.cutoff + 1, b.cutoff + 1);
    for (long i = 0; i < b.mode_count(); ++i) {
        const Mode k = b.mode(i);
        sq(k[0], k[1]) = c[i];
    }
    return sq;
}

inline VectorXd from_square(const Basis& b, const MatrixXd& sq) {
    VectorXd c(b.mode_count());
    for (long i = 0; i < b.mode_count(); ++i) {
        const Mode k = b.mode(i);
        c[i] = sq(k[0], k[1]);
    }
    return c;
}

// vals = B C B^T flattened row-major (axis 1 = rows).
inline VectorXd synth_real(const Grid& g, const Basis& fb, const VectorXd& c) {
    const auto B = g.values.leftCols(fb.cutoff + 1);
    if (fb.dim == 1) return B * c;
    const MatrixXd sq = to_square(fb, c);
    const MatrixXd vals = B * sq * B.transpose();
    return VectorXd(Eigen::Map<const VectorXd>(MatrixXd(vals.transpose()).data(), vals.size()));
}

inline VectorXd analyze_real(const Grid& g, const Basis& fb, const VectorXd& vals) {
    const auto B = g.values.leftCols(fb.cutoff + 1);
    if (fb.dim == 1) return B.transpose() * (g.axis_weights.cwiseProduct(vals));
    const long n = g.axis_count();
    const Eigen::Map<const MatrixXd> V(vals.data(), n, n);  // V(i2, i1) column-major = vals[i1*n+i2]
    const MatrixXd W1 = g.axis_weights.asDiagonal() * B;
    const MatrixXd sq = W1.transpose() * V.transpose() * W1;
    return from_square(fb, sq);
}

} // namespace detail

// Pointwise values sum_k c_k h_k(x_p) on the grid nodes.
inline VectorXcd synthesize_on(const Grid& g, const Basis& fb, const VectorXcd& coeffs) {
    detail::check_synth(g, fb);
    const VectorXd re = detail::synth_real(g, fb, coeffs.real());
    const VectorXd im = detail::synth_real(g, fb, coeffs.imag());
    return re + complex(0, 1) * im;
}

// Projection c_k = sum_p w_p vals_p h_k(x_p); exact for band-limited inputs.
inline VectorXcd analyze_on(const Grid& g, const Basis& fb, const VectorXcd& vals) {
    if (vals.size() != g.point_count()) throw ShapeError("analyze: value count does not match grid");
    detail::check_synth(g, fb);
    const VectorXd re = detail::analyze_real(g, fb, vals.real());
    const VectorXd im = detail::analyze_real(g, fb, vals.imag());
    return re + complex(0, 1) * im;
}

// Coefficients of the partial derivative along `axis`; lives on cutoff+1.
inline VectorXcd derivative_coeffs(const Basis& b, const VectorXcd& c, int axis, const Basis& out_basis) {
    if (axis < 0 || axis >= b.dim) throw DimensionError("derivative_coeffs: bad axis");
    VectorXcd out = VectorXcd::Zero(out_basis.mode_count());
    for (long i = 0; i < b.mode_count(); ++i) {
        Mode k = b.mode(i);
        const int ka = k[axis];
        Mode up = k;
        up[axis] = ka + 1;
        out[out_basis.index_of(up)] -= std::sqrt((ka + 1) / 2.0) * c[i];
        if (ka > 0) {
            Mode dn = k;
            dn[axis] = ka - 1;
            out[out_basis.index_of(dn)] += std::sqrt(ka / 2.0) * c[i];
        }
    }
    return out;
}

// Gradient values on the grid, one vector per axis, computed spectrally.
inline std::array<VectorXcd, 2> gradient_values(const Grid& g, const Basis& fb, const VectorXcd& coeffs) {
    const Basis ext(fb.dim, fb.cutoff + 1, fb.oversample);
    std::array<VectorXcd, 2> out;
    for (int a = 0; a < fb.dim; ++a) {
        const VectorXcd dc = derivative_coeffs(fb, coeffs, a, ext);
        out[a] = synthesize_on(g, ext, dc);
    }
    return out;
}

// Values of the Hermite series at an arbitrary tensor grid of axis points
// (used to evaluate v(alpha x) in the scaling transform).
inline VectorXcd evaluate_at_axis_points(const Basis& fb, const VectorXcd& coeffs, const VectorXd& pts) {
    const MatrixXd B = hermite_matrix(pts, fb.cutoff);
    if (fb.dim == 1) {
        return B * coeffs.real() + complex(0, 1) * (B * coeffs.imag());
    }
    const MatrixXd sre = detail::to_square(fb, coeffs.real());
    const MatrixXd sim = detail::to_square(fb, coeffs.imag());
    MatrixXd re = B * sre * B.transpose();
    MatrixXd im = B * sim * B.transpose();
    const long n = pts.size();
    VectorXcd out(n * n);
    for (long i1 = 0; i1 < n; ++i1)
        for (long i2 = 0; i2 < n; ++i2) out[i1 * n + i2] = complex(re(i1, i2), im(i1, i2));
    return out;
}

} // namespace agp
