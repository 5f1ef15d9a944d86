// anderson.hpp — Galerkin bilinear form of -A for one noise realization,
// its lowest eigenpairs, and quasi-coercivity probes.
//
// 1d works directly in u: a(u,v) = int u'v' + x^2 uv - <xi, uv>, the noise
// paired spectrally on the oversampled grid (the quadratic part is exactly
// diag(lambda^2) in the eigenbasis). 2d works in the transformed state v
// with u = rho v:
//   a(u1,u2) = int (grad v1 . grad v2 + |x|^2 (1-Y) v1 v2) rho^2
//              - sum_i w_i Z v1 v2 rho^2.
// The mass pairing in the transformed state is the rho^2-weighted Gram
// matrix; the energy seminorm is |u|_{W^{1,2}} (1d) and the D^{1,2} norm
// int (|grad v|^2 + |x v|^2) rho^2 (2d).

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "agp/noise.hpp"

namespace agp {

enum class Representation { direct, transformed };

inline const char* to_string(Representation r) {
    return r == Representation::direct ? "direct" : "transformed";
}

namespace detail {

// T[(j1,k1),(j2,k2)] = sum_{i1,i2} F(i1,i2) w_{i1} w_{i2}
//                      A1(i1,j1) A1(i1,k1) A2(i2,j2) A2(i2,k2),
// the axis-factored quadrature of a potential-type 2d form term. Rows of the
// pairwise matrices are identical under j<->k, so T is exactly symmetric
// under the simultaneous swap.
inline MatrixXd pairwise(const MatrixXd& A, const VectorXd& w) {
    const long n = A.rows(), m = A.cols();
    MatrixXd P(m * m, n);
    for (long j = 0; j < m; ++j)
        for (long k = 0; k < m; ++k)
            P.row(j * m + k) = (A.col(j).array() * A.col(k).array() * w.array()).transpose();
    return P;
}

inline MatrixXd pair_transform(const MatrixXd& P1, const MatrixXd& P2, const VectorXd& Fvals, long n) {
    const Eigen::Map<const MatrixXd> F(Fvals.data(), n, n);  // F(i2,i1) = Fvals[i1*n+i2]
    MatrixXd tmp(P1.rows(), n);
    tmp.noalias() = P1 * F.transpose();
    MatrixXd T(P1.rows(), P2.rows());
    T.noalias() = tmp * P2.transpose();
    return T;
}

// Gather the graded modes out of the square-indexed pair matrix.
inline MatrixXd gather_graded(const Basis& b, const MatrixXd& T) {
    const long nm = b.mode_count();
    const long m = b.cutoff + 1;
    MatrixXd M(nm, nm);
    for (long p = 0; p < nm; ++p) {
        const Mode jp = b.mode(p);
        for (long q = 0; q < nm; ++q) {
            const Mode kq = b.mode(q);
            M(p, q) = T(jp[0] * m + kq[0], jp[1] * m + kq[1]);
        }
    }
    return M;
}

} // namespace detail

inline VectorXcd apply_real_matrix(const MatrixXd& M, const VectorXcd& c) {
    return (M * c.real()) + complex(0, 1) * (M * c.imag());
}

struct AndersonForm {
    std::shared_ptr<const EnhancedNoise> noise;
    Representation rep = Representation::direct;
    MatrixXd M;         // form matrix a(h_j, h_k) (in v-coordinates when transformed)
    MatrixXd G;         // L^2 Gram of the physical field; empty = identity (direct)
    MatrixXd S;         // energy seminorm matrix
    VectorXd xi_vals;   // 1d only: synthesized xi_N on the grid
    double delta = 0.0; // recorded quasi-coercivity shift

    const Basis& basis() const { return noise->basis(); }
    const Grid& grid() const { return noise->grid; }
    int dim() const { return noise->dim(); }
    bool has_gram() const { return G.size() > 0; }

    VectorXcd apply(const VectorXcd& c) const { return apply_real_matrix(M, c); }
    VectorXcd gram_apply(const VectorXcd& c) const {
        return has_gram() ? apply_real_matrix(G, c) : c;
    }
};

inline AndersonForm assemble(const std::shared_ptr<const EnhancedNoise>& noise, Representation rep) {
    const Basis& b = noise->basis();
    if ((b.dim == 1) != (rep == Representation::direct))
        throw RepresentationError("assemble: 1d uses the direct state, 2d the transformed one");
    AndersonForm F;
    F.noise = noise;
    F.rep = rep;
    const Grid& g = noise->grid;
    const long nm = b.mode_count();

    if (b.dim == 1) {
        F.xi_vals = synthesize_on(g, b, noise->realization.xi.cast<complex>()).real();
        const auto B = g.values.leftCols(b.cutoff + 1);
        const VectorXd wxi = g.axis_weights.cwiseProduct(F.xi_vals);
        MatrixXd noise_part(nm, nm);
        noise_part.noalias() = B.transpose() * wxi.asDiagonal() * B;
        F.M = -0.5 * (noise_part + noise_part.transpose());
        F.S = MatrixXd::Zero(nm, nm);
        for (long i = 0; i < nm; ++i) {
            F.S(i, i) = b.eigenvalue(i);
            F.M(i, i) += b.eigenvalue(i);
        }
        return F;
    }

    const long n = g.axis_count();
    const auto B = g.values.leftCols(b.cutoff + 1);
    const MatrixXd PB = detail::pairwise(B, g.axis_weights);
    const MatrixXd PD = detail::pairwise(g.derivs.leftCols(b.cutoff + 1), g.axis_weights);

    VectorXd r2(g.point_count());
    for (long p = 0; p < g.point_count(); ++p) r2[p] = g.radius2(p);
    const VectorXd rho2 = noise->rho2_vals;
    const VectorXd pot_free = r2.cwiseProduct(rho2);
    const VectorXd pot_noise = (r2.cwiseProduct(noise->Y_vals) + noise->Z_vals).cwiseProduct(rho2);

    const MatrixXd grad = detail::gather_graded(b, detail::pair_transform(PD, PB, rho2, n)) +
                          detail::gather_graded(b, detail::pair_transform(PB, PD, rho2, n));
    F.S = grad + detail::gather_graded(b, detail::pair_transform(PB, PB, pot_free, n));
    F.M = F.S - detail::gather_graded(b, detail::pair_transform(PB, PB, pot_noise, n));
    F.G = detail::gather_graded(b, detail::pair_transform(PB, PB, rho2, n));
    return F;
}

inline AndersonForm assemble(const std::shared_ptr<const EnhancedNoise>& noise) {
    return assemble(noise, noise->dim() == 1 ? Representation::direct : Representation::transformed);
}

// Re coeffs(u1)^T M conj(coeffs(u2)) = <-A u1, u2> in the Galerkin sense.
inline double form_value(const AndersonForm& F, const SpectralField& u1, const SpectralField& u2) {
    check_same_basis(u1, u2);
    if (!(u1.basis == F.basis())) throw BasisMismatch("form_value: field not on the form's basis");
    return u2.coeffs.real().dot(F.M * u1.coeffs.real()) + u2.coeffs.imag().dot(F.M * u1.coeffs.imag());
}

// 1/2 |u|_{L^2}^2 of the physical field.
inline double mass_of(const AndersonForm& F, const SpectralField& u) {
    if (F.has_gram())
        return 0.5 * (u.coeffs.real().dot(F.G * u.coeffs.real()) +
                      u.coeffs.imag().dot(F.G * u.coeffs.imag()));
    return 0.5 * u.coeffs.squaredNorm();
}

// Pointwise modulus of the physical field, re-analyzed onto the basis.
// (|rho v| = rho |v|, so taking |.| of the state is taking |.| of u.)
inline SpectralField modulus_field(const AndersonForm& F, const SpectralField& u) {
    const VectorXcd vals = synthesize(u, F.grid());
    return analyze(vals.cwiseAbs().cast<complex>(), F.grid(), u.basis);
}

struct EigenResult {
    VectorXd values;                   // ascending
    std::vector<SpectralField> fields; // orthonormal in the physical L^2
    double gap = 0.0;                  // mu_1 - mu_0
};

namespace detail {

struct PencilEigen {
    VectorXd values;
    MatrixXd vectors;
};

// Lowest eigenpairs by Lanczos with full reorthogonalization; generalized
// problems are reduced with the Cholesky factor of the Gram matrix.
inline PencilEigen lanczos_lowest(const MatrixXd& M, const MatrixXd* G, long count, double tol = 1e-9) {
    const long n = M.rows();
    std::optional<Eigen::LLT<MatrixXd>> llt;
    if (G) {
        llt.emplace(*G);
        if (llt->info() != Eigen::Success) throw Error("lanczos: gram matrix not positive definite");
    }
    const auto op = [&](const VectorXd& x) -> VectorXd {
        if (!G) return M * x;
        VectorXd y = llt->matrixU().solve(x);
        y = M * y;
        return llt->matrixL().solve(y);
    };

    long m = std::min<long>(n, std::max<long>(4 * count, 120));
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> normal;
    for (int attempt = 0; attempt < 4; ++attempt) {
        MatrixXd V(n, m);
        VectorXd alpha(m), beta(m);
        VectorXd v(n);
        for (long i = 0; i < n; ++i) v[i] = normal(rng);
        v.normalize();
        V.col(0) = v;
        VectorXd w;
        long steps = m;
        for (long j = 0; j < m; ++j) {
            w = op(V.col(j));
            alpha[j] = V.col(j).dot(w);
            w -= alpha[j] * V.col(j);
            if (j > 0) w -= beta[j - 1] * V.col(j - 1);
            w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);  // full reorth
            const double nb = w.norm();
            if (j + 1 < m) {
                if (nb < 1e-13) { steps = j + 1; break; }
                beta[j] = nb;
                V.col(j + 1) = w / nb;
            }
        }
        MatrixXd T = MatrixXd::Zero(steps, steps);
        for (long j = 0; j < steps; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
        if (steps >= count) {
            PencilEigen out;
            out.values = es.eigenvalues().head(count);
            out.vectors = V.leftCols(steps) * es.eigenvectors().leftCols(count);
            double worst = 0.0;
            for (long i = 0; i < count; ++i) {
                const VectorXd x = out.vectors.col(i);
                worst = std::max(worst, (op(x) - out.values[i] * x).norm() / (1.0 + std::abs(out.values[i])));
            }
            if (worst <= tol) {
                if (G)
                    for (long i = 0; i < count; ++i)
                        out.vectors.col(i) = llt->matrixU().solve(out.vectors.col(i));
                return out;
            }
        }
        m = std::min(n, 2 * m);
    }
    throw ConvergenceError("lanczos: eigenpairs did not reach the residual tolerance");
}

inline PencilEigen pencil_lowest(const MatrixXd& M, const MatrixXd* G, long count, long dense_limit = 4000) {
    if (M.rows() <= dense_limit) {
        PencilEigen out;
        if (G) {
            Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(M, *G);
            if (es.info() != Eigen::Success) throw ConvergenceError("generalized eigensolver failed");
            out.values = es.eigenvalues().head(count);
            out.vectors = es.eigenvectors().leftCols(count);
        } else {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
            if (es.info() != Eigen::Success) throw ConvergenceError("eigensolver failed");
            out.values = es.eigenvalues().head(count);
            out.vectors = es.eigenvectors().leftCols(count);
        }
        return out;
    }
    return lanczos_lowest(M, G, count);
}

} // namespace detail

// Quadrature integral of the physical field (sign-fixing functional).
inline double field_integral(const AndersonForm& F, const VectorXd& state_coeffs) {
    const Grid& g = F.grid();
    const VectorXd vals =
        synthesize_on(g, F.basis(), state_coeffs.cast<complex>()).real();
    double acc = 0.0;
    for (long p = 0; p < g.point_count(); ++p) {
        const double rho = F.rep == Representation::transformed ? F.noise->rho_vals[p] : 1.0;
        acc += g.weight(p) * rho * vals[p];
    }
    return acc;
}

inline EigenResult eigen_lowest(const AndersonForm& F, long count, long dense_limit = 4000) {
    const long n = F.basis().mode_count();
    if (count < 1 || count > n) throw Error("eigen_lowest: count out of range");
    const long want = std::min<long>(n, std::max<long>(count, 2));
    auto pe = detail::pencil_lowest(F.M, F.has_gram() ? &F.G : nullptr, want, dense_limit);

    EigenResult out;
    out.values = pe.values.head(count);
    out.gap = (want >= 2) ? pe.values[1] - pe.values[0] : 0.0;
    out.fields.reserve(count);
    for (long i = 0; i < count; ++i) {
        VectorXd v = pe.vectors.col(i);
        // normalize in the physical L^2 and fix the sign
        const double nrm = F.has_gram() ? std::sqrt(v.dot(F.G * v)) : v.norm();
        v /= nrm;
        double s = (i == 0) ? field_integral(F, v) : 0.0;
        if (i > 0) {
            for (long k = 0; k < n; ++k)
                if (std::abs(v[k]) > 1e-8) { s = v[k]; break; }
        }
        if (s < 0) v = -v;
        // residual certificate
        const VectorXd r = F.M * v - pe.values[i] * (F.has_gram() ? VectorXd(F.G * v) : v);
        if (r.norm() > 1e-8 * (1.0 + std::abs(pe.values[i])))
            throw ConvergenceError("eigen_lowest: residual " + std::to_string(r.norm()) +
                                   " for eigenvalue " + std::to_string(pe.values[i]));
        out.fields.emplace_back(F.basis(), v.cast<complex>());
    }
    return out;
}

struct CoercivityResult {
    double delta_hat = 0.0;        // bisection-grid estimate from samples
    double delta_certified = -1.0; // pencil certificate (< 0 when not computed)
    double bisection_step = 0.0;
};

// Smallest delta on a bisection grid with a(u,u) + delta|u|^2 >= (1/2) s(u)^2
// for all sampled u, the lowest eigenfields, and (certifying exactly when the
// space is small enough) the bottom of the pencil (M - S/2, G).
inline CoercivityResult coercivity_probe(const AndersonForm& F, int trials, std::uint64_t seed,
                                         long certify_limit = 2000) {
    if (trials < 1) throw Error("coercivity_probe: trials must be >= 1");
    const long n = F.basis().mode_count();
    const MatrixXd Q = F.M - 0.5 * F.S;

    std::vector<VectorXd> samples;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int t = 0; t < trials; ++t) {
        VectorXd v(n);
        for (long i = 0; i < n; ++i) v[i] = normal(rng);
        samples.push_back(std::move(v));
    }
    const auto eig = eigen_lowest(F, std::min<long>(4, n));
    for (const auto& f : eig.fields) samples.push_back(f.coeffs.real());

    CoercivityResult out;
    if (n <= certify_limit) {
        auto pe = detail::pencil_lowest(Q, F.has_gram() ? &F.G : nullptr, 1);
        out.delta_certified = std::max(0.0, -pe.values[0]);
        samples.push_back(pe.vectors.col(0));
    }

    const auto ok = [&](double delta) {
        for (const auto& v : samples) {
            const double q = v.dot(Q * v) + delta * (F.has_gram() ? v.dot(F.G * v) : v.squaredNorm());
            if (q < 0) return false;
        }
        return true;
    };
    double hi = 1.0;
    while (!ok(hi)) hi *= 2.0;
    double lo = 0.0;
    if (ok(0.0)) {
        out.delta_hat = 0.0;
        out.bisection_step = 0.0;
        return out;
    }
    for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? hi : lo) = mid;
    }
    out.delta_hat = hi;
    out.bisection_step = hi - lo;
    return out;
}

// Lower-triangle CSV dump of the form matrix.
inline void dump_form_csv(const AndersonForm& F, std::ostream& os) {
    os << "# dim=" << F.dim() << " cutoff=" << F.basis().cutoff << " seed=" << F.noise->realization.seed
       << " mode=" << to_string(F.noise->mode) << " representation=" << to_string(F.rep) << "\n";
    char buf[32];
    for (long i = 0; i < F.M.rows(); ++i) {
        for (long j = 0; j <= i; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", F.M(i, j));
            os << buf << (j == i ? "" : ",");
        }
        os << "\n";
    }
}

} // namespace agp
