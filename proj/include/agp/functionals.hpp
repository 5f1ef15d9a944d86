// functionals.hpp — mass, energy, action and Nehari functionals, their
// Galerkin gradients, the nonlinear term, and the exponential-transform
// scaling u_alpha(x) = alpha^{d/2} rho(x) v(alpha x).
//
// Gradients are taken with respect to the real bracket <g,w> = Re sum g_k
// conj(w_k) on coefficients. In the transformed representation the nonlinear
// term carries the physical-space weight rho^{2 gamma} under the
// rho^2-weighted pairing, i.e. coefficients of rho^{2 gamma + 2} |v|^{2 gamma} v,
// so that g = M u - lambda NL(u) is the exact coefficient-space gradient.

#pragma once

#include "agp/anderson.hpp"

namespace agp {

struct ProblemParams {
    double lambda = 0.0;
    double gamma = 1.0;
    double omega = 0.0;

    ProblemParams() = default;
    ProblemParams(double lambda_, double gamma_, double omega_ = 0.0)
        : lambda(lambda_), gamma(gamma_), omega(omega_) {
        if (gamma <= 0.0) throw ValidationError("ProblemParams: gamma must be > 0");
    }
    bool critical(int dim) const { return gamma == 2.0 / dim; }
};

inline double mass(const AndersonForm& F, const SpectralField& u) { return mass_of(F, u); }

// Values of the state on the grid (v in the transformed representation).
inline VectorXcd state_values(const AndersonForm& F, const SpectralField& u) {
    return synthesize(u, F.grid());
}

// int |u|^{2 gamma + 2} dx by oversampled quadrature.
inline double Q_func(const AndersonForm& F, const SpectralField& u, double gamma) {
    const Grid& g = F.grid();
    const VectorXcd vals = state_values(F, u);
    double acc = 0.0;
    for (long p = 0; p < g.point_count(); ++p) {
        const double a = std::abs(vals[p]);
        const double rho = F.rep == Representation::transformed ? F.noise->rho_vals[p] : 1.0;
        acc += g.weight(p) * std::pow(rho * a, 2.0 * gamma + 2.0);
    }
    return acc;
}

// Projection of |u|^{2 gamma} u back onto the basis (the weight rho^{2 gamma + 2}
// appears in the transformed representation; see the header note).
inline SpectralField nonlinear_term(const AndersonForm& F, const SpectralField& u, double gamma) {
    const Grid& g = F.grid();
    if (g.axis_count() < u.basis.cutoff + 1) throw AliasError("nonlinear_term: grid too coarse");
    VectorXcd vals = state_values(F, u);
    for (long p = 0; p < g.point_count(); ++p) {
        const double a = std::abs(vals[p]);
        double w = std::pow(a, 2.0 * gamma);
        if (F.rep == Representation::transformed)
            w *= std::pow(F.noise->rho_vals[p], 2.0 * gamma + 2.0);
        vals[p] *= w;
    }
    return analyze(vals, g, u.basis);
}

inline double energy(const AndersonForm& F, const SpectralField& u, const ProblemParams& p) {
    return 0.5 * form_value(F, u, u) - p.lambda / (2.0 * p.gamma + 2.0) * Q_func(F, u, p.gamma);
}

// P_omega(u) = <(-A + omega) u, u>
inline double P_omega(const AndersonForm& F, const SpectralField& u, double omega) {
    return form_value(F, u, u) + 2.0 * omega * mass_of(F, u);
}

inline double action(const AndersonForm& F, const SpectralField& u, const ProblemParams& p) {
    return energy(F, u, p) + p.omega * mass_of(F, u);
}

inline double nehari_I(const AndersonForm& F, const SpectralField& u, const ProblemParams& p) {
    return P_omega(F, u, p.omega) - p.lambda * Q_func(F, u, p.gamma);
}

inline double J_omega(const AndersonForm& F, const SpectralField& u, double omega, double gamma) {
    const double q = Q_func(F, u, gamma);
    if (q <= 0.0) throw ZeroFieldError("J_omega: undefined at u = 0");
    return P_omega(F, u, omega) / std::pow(q, 1.0 / (gamma + 1.0));
}

// t_u = (P_omega(u) / (lambda Q(u)))^{1/(2 gamma)}; t_u u lies on the Nehari
// manifold and maximizes t -> S(t u).
inline double t_nehari(const AndersonForm& F, const SpectralField& u, const ProblemParams& p) {
    if (p.lambda <= 0.0) throw SignError("t_nehari: requires lambda > 0");
    const double q = Q_func(F, u, p.gamma);
    if (q <= 0.0) throw ZeroFieldError("t_nehari: undefined at u = 0");
    const double pw = P_omega(F, u, p.omega);
    if (pw <= 0.0) throw SignError("t_nehari: P_omega(u) <= 0 (omega at or below -mu_0?)");
    return std::pow(pw / (p.lambda * q), 1.0 / (2.0 * p.gamma));
}

// g = M u - lambda NL(u): <g, w> is the directional derivative of the energy.
inline SpectralField energy_gradient(const AndersonForm& F, const SpectralField& u,
                                     const ProblemParams& p) {
    VectorXcd g = F.apply(u.coeffs);
    if (p.lambda != 0.0) g -= p.lambda * nonlinear_term(F, u, p.gamma).coeffs;
    return {u.basis, std::move(g)};
}

inline SpectralField mass_gradient(const AndersonForm& F, const SpectralField& u) {
    return {u.basis, F.gram_apply(u.coeffs)};
}

// Frequency of a stationary profile, two algebraically equivalent routes.
inline double omega_rayleigh(const AndersonForm& F, const SpectralField& u, const ProblemParams& p) {
    const double m = mass_of(F, u);
    return (p.lambda * Q_func(F, u, p.gamma) - form_value(F, u, u)) / (2.0 * m);
}

inline double omega_energy_formula(const AndersonForm& F, const SpectralField& u,
                                   const ProblemParams& p) {
    const double m = mass_of(F, u);
    return -energy(F, u, p) / m +
           p.lambda * p.gamma / (2.0 * (p.gamma + 1.0) * m) * Q_func(F, u, p.gamma);
}

// ---------------------------------------------------------------------------
// Scaling transform

namespace detail {

inline VectorXcd state_values_of(const AndersonForm& F, const SpectralField& u, bool as_v) {
    VectorXcd vals = synthesize(u, F.grid());
    if (as_v && F.rep == Representation::direct)
        vals.array() /= F.noise->rho_vals.array().cast<complex>();
    return vals;
}

} // namespace detail

// u_alpha as a coefficient field on the same cutoff: v is evaluated at the
// scaled nodes and re-analyzed. Raises AliasError when the scaled profile
// cannot be represented (spectral/spatial radius check both ways).
inline SpectralField scale_field(const AndersonForm& F, const SpectralField& u, double alpha) {
    if (alpha <= 0.0) throw Error("scale_field: alpha must be > 0");
    const Basis& b = u.basis;
    const Grid& g = F.grid();
    const double stretch = std::max(alpha, 1.0 / alpha);
    const int gmax = effective_grade(u);
    if (stretch * std::sqrt(2.0 * gmax + b.dim) > std::sqrt(2.0 * b.cutoff + b.dim))
        throw AliasError("scale_field: scaled profile exceeds the basis; raise the cutoff");

    // v coefficients (in the direct representation v = u / rho, re-analyzed)
    VectorXcd v_coeffs;
    if (F.rep == Representation::transformed) {
        v_coeffs = u.coeffs;
    } else {
        v_coeffs = analyze_on(g, b, detail::state_values_of(F, u, true));
    }
    const VectorXd scaled_axis = alpha * g.axis_nodes;
    VectorXcd vals = evaluate_at_axis_points(b, v_coeffs, scaled_axis);
    vals *= std::pow(alpha, 0.5 * b.dim);
    if (F.rep == Representation::direct)
        vals.array() *= F.noise->rho_vals.array().cast<complex>();
    return analyze(vals, g, b);
}

// Noise data evaluated at x / alpha on the grid (the alias-free way to probe
// u_alpha: shrink the noise argument instead of stretching the profile).
struct ScaledNoiseValues {
    VectorXd Y, rho, Z;
};

inline ScaledNoiseValues noise_values_at_scale(const AndersonForm& F, double alpha) {
    const EnhancedNoise& e = *F.noise;
    const Grid& g = e.grid;
    const VectorXd shrunk = g.axis_nodes / alpha;
    ScaledNoiseValues out;
    out.Y = evaluate_at_axis_points(e.Y.basis, e.Y.coeffs, shrunk).real();
    out.rho = out.Y.array().exp();
    const Basis ext(e.basis().dim, e.basis().cutoff + 1, e.basis().oversample);
    VectorXd z = VectorXd::Zero(g.point_count());
    for (int a = 0; a < e.dim(); ++a) {
        const VectorXcd dc = derivative_coeffs(e.Y.basis, e.Y.coeffs, a, ext);
        const VectorXd dvals = evaluate_at_axis_points(ext, dc, shrunk).real();
        z += dvals.array().square().matrix();
    }
    if (e.mode == RenormMode::wick) z -= wick_expectation_at(e.basis(), shrunk);
    out.Z = z;
    return out;
}

// int |u_alpha|^q dx by scaled-argument quadrature (exact in v).
inline double scaled_lp_integral(const AndersonForm& F, const SpectralField& u, double alpha, double q) {
    const Grid& g = F.grid();
    const VectorXcd v = detail::state_values_of(F, u, true);
    const ScaledNoiseValues nv = noise_values_at_scale(F, alpha);
    double acc = 0.0;
    for (long p = 0; p < g.point_count(); ++p)
        acc += g.weight(p) * std::pow(nv.rho[p] * std::abs(v[p]), q);
    return std::pow(alpha, F.dim() * (q - 2.0) / 2.0) * acc;
}

// Mass and energy of u_alpha by the same route. The energy splits as
//   E(u_alpha) = (alpha^2/2) int rho(y/a)^2 |grad v|^2
//              + (1/(2 alpha^2)) int (1 - Y(y/a)) rho(y/a)^2 |y v|^2
//              - (1/2) int Z(y/a) rho(y/a)^2 |v|^2
//              - lambda/(2g+2) alpha^{d gamma} int rho(y/a)^{2g+2} |v|^{2g+2}.
// quad_energy carries the first three terms, nonlinear_integral the last
// integral (with its alpha power, without the lambda prefactor), so callers
// can rescale the two parts separately when pinning the mass.
struct ScaledProbe {
    double mass = 0.0;
    double quad_energy = 0.0;
    double nonlinear_integral = 0.0;
    double energy = 0.0;
};

// State given as v-coefficients (u = rho v; v = u in the flat environment).
inline ScaledProbe scaled_probe_state(const AndersonForm& F, const SpectralField& vstate,
                                      double alpha, const ProblemParams& p) {
    const Grid& g = F.grid();
    const Basis& b = vstate.basis;
    const VectorXcd v = synthesize(vstate, g);
    const auto grad = gradient_values(g, b, vstate.coeffs);
    const ScaledNoiseValues nv = noise_values_at_scale(F, alpha);

    double kin = 0.0, pot = 0.0, zline = 0.0, nl = 0.0, m = 0.0;
    for (long pidx = 0; pidx < g.point_count(); ++pidx) {
        const double w = g.weight(pidx);
        const double rho2 = nv.rho[pidx] * nv.rho[pidx];
        double g2 = std::norm(grad[0][pidx]);
        if (b.dim == 2) g2 += std::norm(grad[1][pidx]);
        const double av = std::abs(v[pidx]);
        kin += w * rho2 * g2;
        pot += w * (1.0 - nv.Y[pidx]) * rho2 * g.radius2(pidx) * av * av;
        zline += w * nv.Z[pidx] * rho2 * av * av;
        nl += w * std::pow(nv.rho[pidx] * av, 2.0 * p.gamma + 2.0);
        m += w * rho2 * av * av;
    }
    ScaledProbe out;
    out.mass = 0.5 * m;
    out.quad_energy = 0.5 * (alpha * alpha * kin + pot / (alpha * alpha) - zline);
    out.nonlinear_integral = std::pow(alpha, b.dim * p.gamma) * nl;
    out.energy = out.quad_energy - p.lambda / (2.0 * p.gamma + 2.0) * out.nonlinear_integral;
    return out;
}

inline ScaledProbe scaled_probe(const AndersonForm& F, const SpectralField& u, double alpha,
                                const ProblemParams& p) {
    if (F.rep == Representation::transformed) return scaled_probe_state(F, u, alpha, p);
    const SpectralField vstate{
        u.basis, analyze_on(F.grid(), u.basis, detail::state_values_of(F, u, true))};
    return scaled_probe_state(F, vstate, alpha, p);
}

// ---------------------------------------------------------------------------
// Exact Galerkin matrices of the free quadratic forms (used by the
// Gagliardo-Nirenberg solvers): <d_a h_j, d_a h_k> couples k and k +- 2 e_a.

inline MatrixXd kinetic_matrix(const Basis& b) {
    const long n = b.mode_count();
    MatrixXd K = MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        const Mode k = b.mode(i);
        K(i, i) = 0.5 * b.eigenvalue(i);
        for (int a = 0; a < b.dim; ++a) {
            Mode up = k;
            up[a] += 2;
            if (up[0] + up[1] <= b.cutoff) {
                const long j = b.index_of(up);
                const double c = -0.5 * std::sqrt((k[a] + 1.0) * (k[a] + 2.0));
                K(i, j) = K(j, i) = c;
            }
        }
    }
    return K;
}

inline MatrixXd moment2_matrix(const Basis& b) {
    const long n = b.mode_count();
    MatrixXd X = MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        const Mode k = b.mode(i);
        X(i, i) = 0.5 * b.eigenvalue(i);
        for (int a = 0; a < b.dim; ++a) {
            Mode up = k;
            up[a] += 2;
            if (up[0] + up[1] <= b.cutoff) {
                const long j = b.index_of(up);
                const double c = 0.5 * std::sqrt((k[a] + 1.0) * (k[a] + 2.0));
                X(i, j) = X(j, i) = c;
            }
        }
    }
    return X;
}

} // namespace agp
