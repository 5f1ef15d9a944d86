// solvers.hpp — constrained minimizations producing standing waves:
// energy at fixed mass, action on the Nehari manifold (through P on Q = 1),
// Gagliardo-Nirenberg quotients, and the critical-mass bracket.
//
// The workhorse is a preconditioned, mass- (or Q-) projected gradient flow
// with backtracking (energy never increases on an accepted step), followed
// by a bordered Newton polish once the state is real and the residual is
// small. Each solve is deterministic given (seed, config).

#pragma once

#include <functional>

#include <Eigen/LU>

#include "agp/functionals.hpp"

namespace agp {

struct SolverConfig {
    int max_iters = 5000;
    double step = 0.05;          // initial gradient-flow step
    double tol_residual = 1e-8;  // L^2 Galerkin residual target
    double tol_energy = 1e-12;   // relative per-step decrease floor
    bool precondition = true;
    int restarts = 0;
    std::uint64_t seed = 0;      // nonzero: random initial data

    // plumbing knobs
    double divergence_floor = 1e4;   // blow-down: E < -floor * (1 + |E_0|)
    bool newton_polish = true;
    double probe_alpha_max = 256.0;  // largest alpha in the scaling probe
    double mass_resolution = 0.02;   // critical-mass bisection, relative
};

struct GroundState {
    SpectralField field;
    double omega = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool positive = false;
    bool possibly_unbounded = false;
};

namespace detail {

// Quadrature Gram weighted by `weight` on the grid: sum_p w_p weight_p h_j h_k.
inline MatrixXd weighted_gram(const AndersonForm& F, const VectorXd& weight) {
    const Grid& g = F.grid();
    const Basis& b = F.basis();
    const auto B = g.values.leftCols(b.cutoff + 1);
    if (b.dim == 1) {
        const VectorXd w = g.axis_weights.cwiseProduct(weight);
        MatrixXd M(b.mode_count(), b.mode_count());
        M.noalias() = B.transpose() * w.asDiagonal() * B;
        return 0.5 * (M + M.transpose());
    }
    const MatrixXd P = pairwise(B, g.axis_weights);
    return gather_graded(b, pair_transform(P, P, weight, g.axis_count()));
}

inline VectorXd precond_diag(const MatrixXd& M, const VectorXd& gdiag) {
    VectorXd d = M.diagonal();
    double worst = 0.0;
    for (long i = 0; i < d.size(); ++i) worst = std::min(worst, d[i] / gdiag[i]);
    return d + (1.0 - worst) * gdiag;
}

// Riesz L^2 norm of a coefficient-space residual (G^{-1} inner product in the
// transformed representation; plain norm in the direct one).
struct ResidualNorm {
    const AndersonForm* F;
    std::optional<Eigen::LLT<MatrixXd>> llt;
    explicit ResidualNorm(const AndersonForm& form) : F(&form) {
        if (form.has_gram()) {
            llt.emplace(form.G);
            if (llt->info() != Eigen::Success)
                throw Error("residual norm: gram matrix not positive definite");
        }
    }
    double operator()(const VectorXcd& r) const {
        if (!llt) return r.norm();
        const VectorXd a = llt->solve(r.real());
        const VectorXd b = llt->solve(r.imag());
        return std::sqrt(r.real().dot(a) + r.imag().dot(b));
    }
};

inline double phase_angle(const VectorXcd& c) {
    complex s = 0.0;
    for (long i = 0; i < c.size(); ++i) s += c[i] * c[i];
    return 0.5 * std::arg(s);
}

// Derivative of the nonlinear term at a real state (for Newton systems).
inline MatrixXd nonlinear_jacobian(const AndersonForm& F, const VectorXd& state, double gamma) {
    const VectorXcd vals = synthesize_on(F.grid(), F.basis(), state.cast<complex>());
    VectorXd w(F.grid().point_count());
    for (long p = 0; p < w.size(); ++p) {
        double ww = (2.0 * gamma + 1.0) * std::pow(std::abs(vals[p]), 2.0 * gamma);
        if (F.rep == Representation::transformed)
            ww *= std::pow(F.noise->rho_vals[p], 2.0 * gamma + 2.0);
        w[p] = ww;
    }
    return weighted_gram(F, w);
}

// Min of the phase-fixed profile stays above -1e-8 times its max.
inline bool is_positive_profile(const AndersonForm& F, const VectorXcd& coeffs) {
    const double theta = phase_angle(coeffs);
    const VectorXcd fixed = std::polar(1.0, -theta) * coeffs;
    VectorXd vals = synthesize_on(F.grid(), F.basis(), fixed).real();
    if (vals.sum() < 0) vals = -vals;
    const double mx = vals.cwiseAbs().maxCoeff();
    return vals.minCoeff() >= -1e-8 * mx;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Energy minimization at fixed mass

namespace detail {

inline VectorXcd random_state(const Basis& b, std::uint64_t seed) {
    return random_field(b, seed, 0.1).coeffs;
}

inline void normalize_mass(const AndersonForm& F, VectorXcd& c, double m) {
    const double cur = c.real().dot(F.gram_apply(c).real()) + c.imag().dot(F.gram_apply(c).imag());
    c *= std::sqrt(2.0 * m / cur);
}

struct FlowResult {
    VectorXcd c;
    int iterations = 0;
    bool reached_tol = false;
};

} // namespace detail

inline GroundState energy_ground_state(const AndersonForm& F, const ProblemParams& p, double m,
                                       const SolverConfig& cfg, double critical_mass_lower = -1.0) {
    if (m <= 0.0) throw Error("energy_ground_state: mass must be > 0");
    const Basis& b = F.basis();
    const ProblemParams prob(p.lambda, p.gamma);
    const detail::ResidualNorm rnorm(F);
    const VectorXd gdiag = F.has_gram() ? VectorXd(F.G.diagonal()) : VectorXd::Ones(b.mode_count());
    const VectorXd pdiag = detail::precond_diag(F.M, gdiag);

    bool flag_unbounded = false;
    if (p.lambda > 0.0) {
        if (p.gamma > 2.0 / b.dim) flag_unbounded = true;
        if (p.gamma == 2.0 / b.dim && (critical_mass_lower < 0.0 || m >= critical_mass_lower))
            flag_unbounded = true;
    }

    const auto run_flow = [&](VectorXcd c, GroundState& out) {
        detail::normalize_mass(F, c, m);
        double E = 0.5 * (c.real().dot(F.M * c.real()) + c.imag().dot(F.M * c.imag()));
        SpectralField u{b, c};
        E = energy(F, u, prob);
        const double E0 = E;
        double tau = cfg.step;
        int it = 0;
        double res = std::numeric_limits<double>::infinity();
        double omega = 0.0;
        const double smin0 = u.coeffs.real().dot(F.S * u.coeffs.real()) +
                             u.coeffs.imag().dot(F.S * u.coeffs.imag());

        const auto el_residual = [&](const SpectralField& uu, double& om) {
            om = omega_rayleigh(F, uu, prob);
            const VectorXcd r = F.apply(uu.coeffs) -
                                (p.lambda != 0.0
                                     ? VectorXcd(p.lambda * nonlinear_term(F, uu, p.gamma).coeffs)
                                     : VectorXcd(VectorXcd::Zero(uu.coeffs.size()))) +
                                om * F.gram_apply(uu.coeffs);
            return rnorm(r);
        };

        for (; it < cfg.max_iters; ++it) {
            const SpectralField cur{b, c};
            VectorXcd g = energy_gradient(F, cur, prob).coeffs;
            if (cfg.precondition) g = g.cwiseQuotient(pdiag.cast<complex>());
            // project out the constraint direction
            const VectorXcd n = F.gram_apply(c);
            const double nn = n.squaredNorm();
            if (nn > 0) g -= ((n.adjoint() * g)(0, 0) / nn) * n;

            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt) {
                VectorXcd trial = c - tau * g;
                detail::normalize_mass(F, trial, m);
                const double Et = energy(F, {b, trial}, prob);
                if (Et <= E) {
                    c = std::move(trial);
                    accepted = true;
                    const double drop = (E - Et) / (std::abs(E) + 1e-30);
                    E = Et;
                    tau = std::min(tau * 1.25, 10.0);
                    if (drop < cfg.tol_energy) {
                        const SpectralField uu{b, c};
                        res = el_residual(uu, omega);
                        if (res <= cfg.tol_residual) { ++it; goto done; }
                        if (cfg.newton_polish && res < 1e-3) { ++it; goto done; }
                    }
                    break;
                }
                tau *= 0.5;
                if (tau < 1e-14) break;
            }
            if (!accepted) {
                const SpectralField uu{b, c};
                res = el_residual(uu, omega);
                break;
            }
            if ((it & 15) == 15) {
                const SpectralField uu{b, c};
                res = el_residual(uu, omega);
                if (res <= cfg.tol_residual) { ++it; break; }
                if (cfg.newton_polish && res < 1e-5) { ++it; break; }
                const double smin = c.real().dot(F.S * c.real()) + c.imag().dot(F.S * c.imag());
                if (E < -cfg.divergence_floor * (1.0 + std::abs(E0)) && smin > 100.0 * (smin0 + 1.0))
                    throw DivergenceError(
                        "energy_ground_state: constrained energy unbounded along the flow "
                        "(supercritical blow-down)");
            }
        }
    done:
        // Newton polish on the phase-fixed real profile
        if (cfg.newton_polish) {
            const double theta = detail::phase_angle(c);
            VectorXcd fixed = std::polar(1.0, -theta) * c;
            if (fixed.imag().norm() <= 1e-6 * fixed.real().norm()) {
                VectorXd x = fixed.real();
                double om = omega_rayleigh(F, {b, fixed}, prob);
                const long nmodes = b.mode_count();
                for (int nit = 0; nit < 25; ++nit) {
                    const SpectralField ux{b, x.cast<complex>()};
                    const VectorXd nl =
                        p.lambda != 0.0 ? nonlinear_term(F, ux, p.gamma).coeffs.real()
                                        : VectorXd(VectorXd::Zero(nmodes));
                    const VectorXd gx = F.has_gram() ? VectorXd(F.G * x) : x;
                    const VectorXd r = F.M * x - p.lambda * nl + om * gx;
                    const double rn = rnorm(r.cast<complex>());
                    const double cm = 0.5 * x.dot(gx) - m;
                    if (rn <= 0.05 * cfg.tol_residual && std::abs(cm) <= 1e-13 * m) break;
                    MatrixXd H = F.M + om * (F.has_gram() ? F.G : MatrixXd::Identity(nmodes, nmodes));
                    if (p.lambda != 0.0) H -= p.lambda * detail::nonlinear_jacobian(F, x, p.gamma);
                    MatrixXd J(nmodes + 1, nmodes + 1);
                    J.topLeftCorner(nmodes, nmodes) = H;
                    J.topRightCorner(nmodes, 1) = gx;
                    J.bottomLeftCorner(1, nmodes) = gx.transpose();
                    J(nmodes, nmodes) = 0.0;
                    VectorXd rhs(nmodes + 1);
                    rhs.head(nmodes) = -r;
                    rhs[nmodes] = -cm;
                    const VectorXd delta = J.partialPivLu().solve(rhs);
                    x += delta.head(nmodes);
                    om += delta[nmodes];
                }
                c = x.cast<complex>();
                detail::normalize_mass(F, c, m);
            }
        }
        const SpectralField uu{b, c};
        out.field = uu;
        out.omega = omega_rayleigh(F, uu, prob);
        out.mass = mass_of(F, uu);
        out.energy = energy(F, uu, prob);
        const VectorXcd r = F.apply(c) -
                            (p.lambda != 0.0
                                 ? VectorXcd(p.lambda * nonlinear_term(F, uu, p.gamma).coeffs)
                                 : VectorXcd(VectorXcd::Zero(c.size()))) +
                            out.omega * F.gram_apply(c);
        out.residual = rnorm(r);
        out.iterations = it;
        out.converged = out.residual <= cfg.tol_residual;
        out.positive = detail::is_positive_profile(F, c);
        out.possibly_unbounded = flag_unbounded;
    };

    std::optional<GroundState> best;
    const int attempts = std::max(1, cfg.restarts + 1);
    for (int a = 0; a < attempts; ++a) {
        VectorXcd c0;
        if (a == 0 && cfg.seed == 0) {
            const auto eig = eigen_lowest(F, 1);
            c0 = eig.fields[0].coeffs;
        } else {
            c0 = detail::random_state(b, cfg.seed + 977 * a + 1);
        }
        GroundState gs;
        run_flow(std::move(c0), gs);
        if (!best || (gs.converged && !best->converged) ||
            (gs.converged == best->converged && gs.energy < best->energy))
            best = std::move(gs);
    }
    if (!best->converged)
        throw ConvergenceError("energy_ground_state: residual " + std::to_string(best->residual) +
                               " after " + std::to_string(best->iterations) + " iterations");
    return *best;
}

// ---------------------------------------------------------------------------
// Action minimization on the Nehari manifold via P on {Q = 1}

struct ActionResult {
    GroundState state;        // psi_omega on the Nehari manifold
    SpectralField minimizer;  // u* with Q(u*) = 1
    double J = 0.0;           // min P on Q = 1 (= J_omega)
};

namespace detail {

inline void normalize_Q(const AndersonForm& F, VectorXcd& c, double gamma, double target) {
    const double q = Q_func(F, {F.basis(), c}, gamma);
    if (q <= 0) throw ZeroFieldError("normalize_Q: zero state");
    c *= std::pow(target / q, 1.0 / (2.0 * gamma + 2.0));
}

} // namespace detail

// Minimize P_omega over {Q = q_target}; returns the minimizer and the
// Lagrange multiplier lambda_* with (M + omega G) u = lambda_* NL(u).
struct PQMinimum {
    SpectralField minimizer;
    double P = 0.0;
    double multiplier = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline PQMinimum minimize_P_on_Q(const AndersonForm& F, double omega, double gamma, double q_target,
                                 const SolverConfig& cfg) {
    const Basis& b = F.basis();
    const auto eig = eigen_lowest(F, 1);
    if (omega <= -eig.values[0] + 1e-10)
        throw FrequencyError("minimize_P_on_Q: omega must exceed -mu_0");
    const MatrixXd A = F.M + omega * (F.has_gram() ? F.G : MatrixXd::Identity(b.mode_count(),
                                                                              b.mode_count()));
    const VectorXd gdiag = F.has_gram() ? VectorXd(F.G.diagonal()) : VectorXd::Ones(b.mode_count());
    const VectorXd pdiag = detail::precond_diag(A, gdiag);
    const detail::ResidualNorm rnorm(F);

    VectorXcd c = cfg.seed ? detail::random_state(b, cfg.seed) : eig.fields[0].coeffs;
    detail::normalize_Q(F, c, gamma, q_target);
    const auto Pval = [&](const VectorXcd& x) {
        return x.real().dot(A * x.real()) + x.imag().dot(A * x.imag());
    };
    double P = Pval(c);
    double tau = cfg.step;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        VectorXcd g = apply_real_matrix(A, c);
        if (cfg.precondition) g = g.cwiseQuotient(pdiag.cast<complex>());
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            VectorXcd trial = c - tau * g;
            detail::normalize_Q(F, trial, gamma, q_target);
            const double Pt = Pval(trial);
            if (Pt <= P) {
                const double drop = (P - Pt) / (std::abs(P) + 1e-30);
                c = std::move(trial);
                P = Pt;
                tau = std::min(tau * 1.25, 10.0);
                accepted = true;
                if (drop < cfg.tol_energy) it = cfg.max_iters;  // hand over to Newton
                break;
            }
            tau *= 0.5;
            if (tau < 1e-14) break;
        }
        if (!accepted) break;
    }

    PQMinimum out;
    // Newton polish on the real profile with the multiplier as unknown
    const double theta = detail::phase_angle(c);
    VectorXcd fixed = std::polar(1.0, -theta) * c;
    VectorXd x = fixed.real();
    const long n = b.mode_count();
    double lam = Pval(fixed.cast<complex>()) / q_target;  // multiplier estimate at Q = q
    double resn = std::numeric_limits<double>::infinity();
    if (cfg.newton_polish && fixed.imag().norm() <= 1e-6 * fixed.real().norm()) {
        for (int nit = 0; nit < 30; ++nit) {
            const SpectralField ux{b, x.cast<complex>()};
            const VectorXd nl = nonlinear_term(F, ux, gamma).coeffs.real();
            const VectorXd r = A * x - lam * nl;
            const double cm = Q_func(F, ux, gamma) - q_target;
            resn = rnorm(r.cast<complex>());
            if (resn <= 0.05 * cfg.tol_residual && std::abs(cm) <= 1e-12 * q_target) break;
            MatrixXd J(n + 1, n + 1);
            J.topLeftCorner(n, n) = A - lam * detail::nonlinear_jacobian(F, x, gamma);
            J.topRightCorner(n, 1) = -nl;
            J.bottomLeftCorner(1, n) = (2.0 * gamma + 2.0) * nl.transpose();
            J(n, n) = 0.0;
            VectorXd rhs(n + 1);
            rhs.head(n) = -r;
            rhs[n] = -cm;
            const VectorXd delta = J.partialPivLu().solve(rhs);
            x += delta.head(n);
            lam += delta[n];
        }
        fixed = x.cast<complex>();
    }
    out.minimizer = SpectralField{b, fixed};
    out.P = Pval(fixed);
    out.multiplier = lam;
    out.iterations = it;
    {
        const VectorXd nl = nonlinear_term(F, out.minimizer, gamma).coeffs.real();
        const VectorXd r = A * x - lam * nl;
        out.converged = rnorm(r.cast<complex>()) <= cfg.tol_residual * std::max(1.0, out.P);
    }
    if (!out.converged)
        throw ConvergenceError("minimize_P_on_Q: Euler-Lagrange residual above tolerance");
    return out;
}

inline ActionResult action_ground_state(const AndersonForm& F, const ProblemParams& p,
                                        const SolverConfig& cfg) {
    if (p.lambda <= 0.0) throw SignError("action_ground_state: requires lambda > 0");
    auto pq = minimize_P_on_Q(F, p.omega, p.gamma, 1.0, cfg);

    ActionResult out;
    out.minimizer = pq.minimizer;
    out.J = pq.P;  // J_omega = min P on Q = 1
    const double t = std::pow(out.J / p.lambda, 1.0 / (2.0 * p.gamma));
    SpectralField psi{F.basis(), t * pq.minimizer.coeffs};

    GroundState gs;
    gs.field = psi;
    gs.omega = p.omega;
    gs.mass = mass_of(F, psi);
    gs.energy = energy(F, psi, p);
    const detail::ResidualNorm rnorm(F);
    const VectorXcd r = F.apply(psi.coeffs) - p.lambda * nonlinear_term(F, psi, p.gamma).coeffs +
                        p.omega * F.gram_apply(psi.coeffs);
    gs.residual = rnorm(r);
    gs.iterations = pq.iterations;
    gs.converged = gs.residual <= cfg.tol_residual * std::max(1.0, out.J);
    gs.positive = detail::is_positive_profile(F, psi.coeffs);
    out.state = std::move(gs);

    // consistency of the action identities on the manifold
    const double S = action(F, out.state.field, p);
    const double expect = p.gamma / (2.0 * p.gamma + 2.0) * std::pow(p.lambda, -1.0 / p.gamma) *
                          std::pow(out.J, (p.gamma + 1.0) / p.gamma);
    if (std::abs(S - expect) > 1e-6 * std::max(1.0, std::abs(expect)))
        throw ConvergenceError("action_ground_state: action identity violated");
    return out;
}

// ---------------------------------------------------------------------------
// Gagliardo-Nirenberg quotients

struct GNResult {
    double J = 0.0;
    SpectralField soliton;       // rescaled so Delta Q - Q + lambda Q^{2g+1} = 0 with lambda = 1
    double pohozaev_residual = 0.0;
    double m_star = 0.0;         // critical mass at lambda = 1
    int iterations = 0;
};

namespace detail {

// Scale-invariant quotient descent shared by the free and noisy constants.
// quotient(v) = num2(v) * mass2(v)^gamma / nl(v), all homogeneous of total
// degree zero in the amplitude.
struct QuotientProblem {
    std::function<double(const VectorXd&)> num2;    // v^T K v
    std::function<VectorXd(const VectorXd&)> num2_grad;
    std::function<double(const VectorXd&)> mass2;   // v^T G v
    std::function<VectorXd(const VectorXd&)> mass2_grad;
    std::function<double(const VectorXd&)> nl;      // int |v|^{2g+2} (weighted)
    std::function<VectorXd(const VectorXd&)> nl_grad;
    VectorXd precond;
    double gamma = 1.0;
};

struct QuotientMin {
    VectorXd v;
    double value = 0.0;
    int iterations = 0;
};

inline QuotientMin minimize_quotient(const QuotientProblem& qp, VectorXd v, int max_iters,
                                     double tol) {
    v /= v.norm();
    const auto val = [&](const VectorXd& x) {
        return qp.num2(x) * std::pow(qp.mass2(x), qp.gamma) / qp.nl(x);
    };
    double J = val(v);
    double tau = 0.05;
    int it = 0;
    for (; it < max_iters; ++it) {
        const double A = qp.num2(v), B = qp.mass2(v), C = qp.nl(v);
        VectorXd g = qp.num2_grad(v) / A + qp.gamma * qp.mass2_grad(v) / B - qp.nl_grad(v) / C;
        g = g.cwiseQuotient(qp.precond);
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            VectorXd trial = v - tau * g;
            trial /= trial.norm();
            const double Jt = val(trial);
            if (Jt <= J) {
                const double drop = (J - Jt) / (std::abs(J) + 1e-30);
                v = std::move(trial);
                J = Jt;
                tau = std::min(tau * 1.25, 5.0);
                accepted = true;
                if (drop < tol) it = max_iters;
                break;
            }
            tau *= 0.5;
            if (tau < 1e-15) break;
        }
        if (!accepted) break;
    }
    return {v, J, it};
}

} // namespace detail

inline GNResult gn_constant(int dim, double gamma, const SolverConfig& cfg, int cutoff = 64) {
    const Basis b(dim, cutoff);
    const Grid g = make_grid(b);
    const MatrixXd K = kinetic_matrix(b);
    const long n = b.mode_count();

    const auto nl_val = [&](const VectorXd& v) {
        const VectorXd vals = detail::synth_real(g, b, v);
        double acc = 0.0;
        for (long p = 0; p < vals.size(); ++p)
            acc += g.weight(p) * std::pow(std::abs(vals[p]), 2.0 * gamma + 2.0);
        return acc;
    };
    const auto nl_grad = [&](const VectorXd& v) {
        VectorXd vals = detail::synth_real(g, b, v);
        for (long p = 0; p < vals.size(); ++p)
            vals[p] = (2.0 * gamma + 2.0) * std::pow(std::abs(vals[p]), 2.0 * gamma) * vals[p];
        return detail::analyze_real(g, b, vals);
    };

    detail::QuotientProblem qp;
    qp.gamma = gamma;
    qp.num2 = [&](const VectorXd& v) { return v.dot(K * v); };
    qp.num2_grad = [&](const VectorXd& v) { return VectorXd(2.0 * (K * v)); };
    qp.mass2 = [](const VectorXd& v) { return v.squaredNorm(); };
    qp.mass2_grad = [](const VectorXd& v) { return VectorXd(2.0 * v); };
    qp.nl = nl_val;
    qp.nl_grad = nl_grad;
    qp.precond.resize(n);
    for (long i = 0; i < n; ++i) qp.precond[i] = b.eigenvalue(i) + 1.0;

    VectorXd v0 = VectorXd::Zero(n);
    v0[0] = 1.0;
    if (cfg.seed) v0 = random_field(b, cfg.seed, 0.4, false).coeffs.real().cwiseAbs();
    auto qm = detail::minimize_quotient(qp, v0, cfg.max_iters, 1e-14);

    GNResult out;
    out.J = qm.value;
    out.iterations = qm.iterations;
    // soliton normalization Q(x) = a v(b x) with
    //   b^2 = B/(gamma A), a^{2 gamma} = (gamma+1) B / (gamma C)  (lambda = 1)
    const double A = qp.num2(qm.v), B = qp.mass2(qm.v), C = qp.nl(qm.v);
    const double bscale = std::sqrt(B / (gamma * A));
    const double ascale = std::pow((gamma + 1.0) * B / (gamma * C), 1.0 / (2.0 * gamma));
    VectorXcd vals = evaluate_at_axis_points(b, qm.v.cast<complex>(), bscale * g.axis_nodes);
    out.soliton = analyze(ascale * vals, g, b);

    // Pohozaev through quadrature on the returned field
    const double gradQ = out.soliton.coeffs.real().dot(K * out.soliton.coeffs.real());
    const double nlQ = nl_val(out.soliton.coeffs.real());
    out.pohozaev_residual = std::abs(0.5 * gradQ - nlQ / (2.0 * gamma + 2.0)) /
                            std::max(1e-300, std::abs(0.5 * gradQ));
    out.m_star = 0.5 * std::pow((gamma + 1.0) * out.J, 1.0 / gamma);
    return out;
}

inline double noisy_gn_constant(const AndersonForm& F, const SolverConfig& cfg,
                                const SpectralField* townes = nullptr) {
    const Basis& b = F.basis();
    if (b.dim != 2) throw DimensionError("noisy_gn_constant: defined in dimension 2");
    const Grid& g = F.grid();
    const long n = b.mode_count();
    const VectorXd rho4 = F.noise->rho2_vals.array().square();

    const auto nl_val = [&](const VectorXd& v) {
        const VectorXd vals = detail::synth_real(g, b, v);
        double acc = 0.0;
        for (long p = 0; p < vals.size(); ++p)
            acc += g.weight(p) * rho4[p] * std::pow(vals[p], 4.0);
        return acc;
    };
    const auto nl_grad = [&](const VectorXd& v) {
        VectorXd vals = detail::synth_real(g, b, v);
        for (long p = 0; p < vals.size(); ++p)
            vals[p] = 4.0 * rho4[p] * vals[p] * vals[p] * vals[p];
        return detail::analyze_real(g, b, vals);
    };

    detail::QuotientProblem qp;
    qp.gamma = 1.0;
    qp.num2 = [&](const VectorXd& v) { return v.dot(F.S * v); };
    qp.num2_grad = [&](const VectorXd& v) { return VectorXd(2.0 * (F.S * v)); };
    qp.mass2 = [&](const VectorXd& v) { return v.dot(F.G * v); };
    qp.mass2_grad = [&](const VectorXd& v) { return VectorXd(2.0 * (F.G * v)); };
    qp.nl = nl_val;
    qp.nl_grad = nl_grad;
    qp.precond.resize(n);
    for (long i = 0; i < n; ++i) qp.precond[i] = b.eigenvalue(i) + 1.0;

    std::vector<VectorXd> starts;
    VectorXd gauss = VectorXd::Zero(n);
    gauss[0] = 1.0;
    starts.push_back(gauss);
    if (cfg.seed) starts.push_back(random_field(b, cfg.seed, 0.4, false).coeffs.real().cwiseAbs());
    if (townes) {
        const double r_townes = std::sqrt(2.0 * effective_grade(*townes) + 2.0);
        const double r_grid = std::sqrt(2.0 * b.cutoff + 2.0);
        for (double beta : {1.0, 1.5, 2.0, 2.8, 3.8}) {
            if (beta * r_townes > r_grid) break;
            VectorXcd vals =
                evaluate_at_axis_points(townes->basis, townes->coeffs, beta * g.axis_nodes);
            starts.push_back(analyze_on(g, b, vals).real());
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
        if (s.norm() == 0.0) continue;
        const auto qm = detail::minimize_quotient(qp, s, cfg.max_iters, 1e-14);
        best = std::min(best, qm.value);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Critical mass bracket at gamma = 2/d

struct CriticalMassResult {
    double lower = 0.0;       // certified coercive bound
    double upper = 0.0;       // scaling-probe bisection bound
    double m_star = 0.0;      // flat-environment critical mass at this lambda
    double J = 0.0;           // free Gagliardo-Nirenberg constant
    double J_noisy = -1.0;    // 2d only
    double alpha_max = 0.0;   // largest scale used by the probe
};

inline CriticalMassResult critical_mass(const AndersonForm& F, const ProblemParams& p,
                                        const SolverConfig& cfg) {
    const Basis& b = F.basis();
    if (p.gamma != 2.0 / b.dim)
        throw CriticalityError("critical_mass: requires gamma = 2/dim exactly");
    if (p.lambda <= 0.0) throw CriticalityError("critical_mass: requires lambda > 0");

    CriticalMassResult out;
    const auto gn = gn_constant(b.dim, p.gamma, cfg, b.cutoff);
    out.J = gn.J;
    out.m_star = 0.5 * std::pow((p.gamma + 1.0) * gn.J / p.lambda, 1.0 / p.gamma);
    if (b.dim == 1) {
        out.lower = out.m_star;  // m*_lambda(Xi) = m*_lambda in dimension 1
    } else {
        out.J_noisy = noisy_gn_constant(F, cfg, &gn.soliton);
        out.lower = out.J_noisy / p.lambda;
    }

    // scaling probe with u = c rho Q, c pinned so the alpha -> infinity mass is m
    const double rho0 = rho_at(*F.noise, {0.0, 0.0});
    const double qnorm2 = gn.soliton.coeffs.squaredNorm();
    std::vector<double> alphas;
    for (double a = 2.0; a <= cfg.probe_alpha_max; a *= 2.0) alphas.push_back(a);
    out.alpha_max = alphas.back();

    const auto blow_down = [&](double m) {
        const double c = std::sqrt(2.0 * m) / (rho0 * std::sqrt(qnorm2));
        SpectralField vstate{b, c * gn.soliton.coeffs};
        const auto base = scaled_probe_state(F, vstate, 1.0, p);
        const double e1 = (m / base.mass) * base.quad_energy -
                          p.lambda / (2.0 * p.gamma + 2.0) *
                              std::pow(m / base.mass, p.gamma + 1.0) * base.nonlinear_integral;
        const double floor = -1e3 * std::max(1.0, std::abs(e1));
        for (const double a : alphas) {
            const auto pr = scaled_probe_state(F, vstate, a, p);
            const double ratio = m / pr.mass;
            const double e = ratio * pr.quad_energy -
                             p.lambda / (2.0 * p.gamma + 2.0) * std::pow(ratio, p.gamma + 1.0) *
                                 pr.nonlinear_integral;
            if (e < floor) return true;
        }
        return false;
    };

    double hi = 1.05 * out.m_star;
    double lo = 0.5 * std::min(out.lower, out.m_star);
    int guard = 0;
    while (!blow_down(hi) && guard++ < 8) hi *= 1.3;
    if (!blow_down(hi)) {
        out.upper = hi;  // no blow-down detected up to this mass; report the cap
        return out;
    }
    while (blow_down(lo) && guard++ < 16) lo *= 0.7;
    while ((hi - lo) > cfg.mass_resolution * out.m_star) {
        const double mid = 0.5 * (lo + hi);
        (blow_down(mid) ? hi : lo) = mid;
    }
    out.upper = hi;
    return out;
}

// ---------------------------------------------------------------------------
// Small-mass sweep

struct SweepRow {
    double m = 0.0;
    double omega = 0.0;
    double l2_err_to_phi0 = 0.0;
    double energy = 0.0;
    double residual = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double mu0 = 0.0;
    double fitted_exponent = 0.0;
    double fitted_prefactor = 0.0;
    double reference_prefactor = 0.0;  // lambda 2^gamma int phi_0^{2 gamma + 2}
};

inline SweepResult small_mass_sweep(const AndersonForm& F, const ProblemParams& p,
                                    const std::vector<double>& masses, const SolverConfig& cfg) {
    if (masses.empty()) throw Error("small_mass_sweep: empty mass grid");
    for (size_t i = 1; i < masses.size(); ++i)
        if (masses[i] >= masses[i - 1]) throw Error("small_mass_sweep: masses must be descending");

    SweepResult out;
    const auto eig = eigen_lowest(F, 1);
    out.mu0 = eig.values[0];
    const SpectralField& phi0 = eig.fields[0];
    out.reference_prefactor =
        p.lambda * std::pow(2.0, p.gamma) * Q_func(F, phi0, p.gamma);

    for (const double m : masses) {
        const auto gs = energy_ground_state(F, p, m, cfg);
        SweepRow row;
        row.m = m;
        row.omega = gs.omega;
        row.energy = gs.energy;
        row.residual = gs.residual;
        // psi_m = (2m)^{-1/2} phi_m, phase- and sign-fixed against phi_0
        VectorXcd psi = gs.field.coeffs / std::sqrt(2.0 * m);
        const double theta = detail::phase_angle(psi);
        VectorXd re = (std::polar(1.0, -theta) * psi).real();
        if (re.dot(phi0.coeffs.real()) < 0) re = -re;
        const VectorXd diff = re - phi0.coeffs.real();
        row.l2_err_to_phi0 =
            F.has_gram() ? std::sqrt(diff.dot(F.G * diff)) : diff.norm();
        out.rows.push_back(row);
    }

    // least squares of log|omega_m + mu_0| against log m
    const size_t k = out.rows.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& row : out.rows) {
        const double x = std::log(row.m);
        const double y = std::log(std::abs(row.omega + out.mu0));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double denom = k * sxx - sx * sx;
    out.fitted_exponent = (k * sxy - sx * sy) / denom;
    out.fitted_prefactor = std::exp((sy - out.fitted_exponent * sx) / k);
    return out;
}

} // namespace agp
