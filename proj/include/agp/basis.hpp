// basis.hpp — truncated Hermite eigenbasis of -H = -Laplacian + |x|^2 and
// Gauss-Hermite quadrature rules with the Gaussian factor absorbed into the
// weights.
//
// Normalized Hermite functions h_k satisfy -H h_k = (2k+1) h_k in 1d; in 2d
// the eigenfunctions are tensor products h_{k1} h_{k2} with eigenvalue
// 2(k1+k2)+2. Modes are enumerated graded-lexicographically: ordered by total
// degree |k|, then by ascending first component ("graded-lex-v1").

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "agp/errors.hpp"

namespace agp {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr const char* kEnumerationVersion = "graded-lex-v1";

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using complex = std::complex<double>;

// A 2d multi-index; in 1d the second component is 0 and ignored.
using Mode = std::array<int, 2>;

struct Basis {
    int dim = 1;          // 1 or 2
    int cutoff = 16;      // N; modes have total degree <= N
    double oversample = 2.0;

    Basis() = default;
    Basis(int dim_, int cutoff_, double oversample_ = 2.0)
        : dim(dim_), cutoff(cutoff_), oversample(oversample_) {
        if (dim != 1 && dim != 2) throw DimensionError("Basis: dim must be 1 or 2");
        if (cutoff < 1) throw Error("Basis: cutoff must be >= 1");
        if (oversample < 1.0) throw Error("Basis: oversample must be >= 1");
    }

    long mode_count() const {
        const long n = cutoff;
        return dim == 1 ? n + 1 : (n + 1) * (n + 2) / 2;
    }

    // Number of quadrature nodes per axis (the dealiasing contract).
    int axis_node_count() const {
        return static_cast<int>(std::ceil(oversample * (cutoff + 1)));
    }

    // Total degree of the mode with the given linear index.
    int grade(long index) const {
        if (dim == 1) return static_cast<int>(index);
        const long g = static_cast<long>((std::sqrt(8.0 * static_cast<double>(index) + 1.0) - 1.0) / 2.0);
        // guard against rounding at triangular-number boundaries
        long gg = g;
        while (gg * (gg + 1) / 2 > index) --gg;
        while ((gg + 1) * (gg + 2) / 2 <= index) ++gg;
        return static_cast<int>(gg);
    }

    Mode mode(long index) const {
        if (dim == 1) return {static_cast<int>(index), 0};
        const int g = grade(index);
        const int k1 = static_cast<int>(index - static_cast<long>(g) * (g + 1) / 2);
        return {k1, g - k1};
    }

    long index_of(const Mode& k) const {
        if (dim == 1) return k[0];
        const long g = k[0] + k[1];
        return g * (g + 1) / 2 + k[0];
    }

    // lambda_k^2 = 2|k| + dim
    double eigenvalue(long index) const { return 2.0 * grade(index) + dim; }

    bool operator==(const Basis& o) const {
        return dim == o.dim && cutoff == o.cutoff && oversample == o.oversample;
    }
};

namespace detail {

// Evaluates h_0..h_kmax at x by the upward recurrence on the normalized
// functions, carrying the Gaussian factor as a separate log scale so values
// survive far outside the classical turning points. Entries below the
// double-precision floor come out as exact zeros.
inline void hermite_column(double x, int kmax, double* out) {
    double logscale = -0.5 * x * x - 0.25 * std::log(kPi);
    double prev = 0.0;
    double cur = 1.0;
    double expscale = (logscale > -700.0) ? std::exp(logscale) : 0.0;
    bool fast = logscale > -700.0;
    for (int k = 0; k <= kmax; ++k) {
        if (fast) {
            out[k] = cur * expscale;
        } else if (cur != 0.0) {
            const double lg = logscale + std::log(std::abs(cur));
            out[k] = (lg > -744.0) ? std::copysign(std::exp(lg), cur) : 0.0;
        } else {
            out[k] = 0.0;
        }
        if (k == kmax) break;
        const double next =
            std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > 1e100) {
            cur *= 1e-100;
            prev *= 1e-100;
            logscale += 100.0 * std::log(10.0);
            fast = logscale > -700.0;
            expscale = fast ? std::exp(logscale) : 0.0;
        }
    }
}

} // namespace detail

// Matrix of Hermite function values: out(i, k) = h_k(points[i]), k = 0..kmax.
inline MatrixXd hermite_matrix(const VectorXd& points, int kmax) {
    MatrixXd out(points.size(), kmax + 1);
    VectorXd col(kmax + 1);
    for (Eigen::Index i = 0; i < points.size(); ++i) {
        detail::hermite_column(points[i], kmax, col.data());
        out.row(i) = col.transpose();
    }
    return out;
}

// h_k'(x) = sqrt(k/2) h_{k-1}(x) - sqrt((k+1)/2) h_{k+1}(x), from a value
// matrix holding modes up to kmax+1.
inline MatrixXd hermite_derivative_matrix(const MatrixXd& values, int kmax) {
    if (values.cols() < kmax + 2) throw ShapeError("hermite_derivative_matrix: need modes up to kmax+1");
    MatrixXd out(values.rows(), kmax + 1);
    for (int k = 0; k <= kmax; ++k) {
        out.col(k) = -std::sqrt((k + 1) / 2.0) * values.col(k + 1);
        if (k > 0) out.col(k) += std::sqrt(k / 2.0) * values.col(k - 1);
    }
    return out;
}

// Value of the normalized 1d Hermite function h_k at x.
inline double hermite_eval(int k, double x) {
    VectorXd col(k + 1);
    detail::hermite_column(x, k, col.data());
    return col[k];
}

// d-dimensional eigenfunction value: product of 1d factors.
inline double hermite_eval(const Mode& k, const std::array<double, 2>& x, int dim) {
    double v = hermite_eval(k[0], x[0]);
    if (dim == 2) v *= hermite_eval(k[1], x[1]);
    return v;
}

struct QuadratureRule {
    VectorXd nodes;    // ascending
    VectorXd weights;  // absorbed: sum_i w_i f(x_i) ~ \int f for f = poly * exp(-x^2)
};

// n-point Gauss-Hermite rule by Golub-Welsch on the Jacobi matrix, nodes
// polished by two Newton steps on h_n, weights through w_i = 1/(n h_{n-1}(x_i)^2)
// (the Gaussian factor is already absorbed in that formula).
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw Error("gauss_hermite: n must be >= 1");
    VectorXd diag = VectorXd::Zero(n);
    VectorXd sub(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    VectorXd x = es.eigenvalues();

    VectorXd col(n + 1);
    for (int newton = 0; newton < 2; ++newton) {
        for (int i = 0; i < n; ++i) {
            detail::hermite_column(x[i], n, col.data());
            const double hn = col[n];
            const double dhn = -x[i] * col[n] + std::sqrt(2.0 * n) * col[n - 1];
            if (dhn != 0.0) x[i] -= hn / dhn;
        }
    }
    // enforce the exact symmetry of the rule
    for (int i = 0; i < n / 2; ++i) {
        const double s = 0.5 * (x[i] - x[n - 1 - i]);
        x[i] = s;
        x[n - 1 - i] = -s;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;

    VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        detail::hermite_column(x[i], n - 1, col.data());
        const double hm = col[n - 1];
        w[i] = 1.0 / (n * hm * hm);
    }
    return {x, w};
}

} // namespace agp
