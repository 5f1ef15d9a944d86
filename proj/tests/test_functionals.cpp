#include <catch2/catch_amalgamated.hpp>

#include "agp/functionals.hpp"

using namespace agp;

namespace {

std::shared_ptr<const EnhancedNoise> make_noise(int dim, int cutoff, std::uint64_t seed,
                                                bool zero = false) {
    auto r = sample_noise(seed, Basis(dim, cutoff));
    if (zero) r.xi.setZero();
    return std::make_shared<EnhancedNoise>(
        enhance(r, dim == 1 ? RenormMode::bare : RenormMode::wick));
}

SpectralField banded_field(const Basis& b, std::uint64_t seed, int max_grade,
                           bool complex_valued = true) {
    auto f = random_field(b, seed, 0.1, complex_valued);
    for (long i = 0; i < b.mode_count(); ++i)
        if (b.grade(i) > max_grade) f.coeffs[i] = 0.0;
    return f;
}

// maximizer of t -> S(t u) on [1e-3, 1e3] by golden-section search
double golden_section_t(const AndersonForm& F, const SpectralField& u, const ProblemParams& p) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(1e-3), b = std::log(1e3);
    const auto S = [&](double logt) {
        SpectralField tu{u.basis, std::exp(logt) * u.coeffs};
        return action(F, tu, p);
    };
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = S(c), fd = S(d);
    while (b - a > 1e-11) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - phi * (b - a); fc = S(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + phi * (b - a); fd = S(d);
        }
    }
    return std::exp(0.5 * (a + b));
}

} // namespace

TEST_CASE("mass anchors, both representations") {
    const auto F1 = assemble(make_noise(1, 32, 3));
    auto u = random_field(F1.basis(), 4);
    u.coeffs /= u.coeffs.norm();
    CHECK_THAT(mass(F1, u), Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK(mass(F1, zero_field(F1.basis())) == 0.0);

    const auto F2 = assemble(make_noise(2, 12, 0, /*zero=*/true));
    const auto v = random_field(F2.basis(), 6);
    CHECK_THAT(mass(F2, v), Catch::Matchers::WithinAbs(0.5 * v.coeffs.squaredNorm(), 1e-10));
}

TEST_CASE("nonlinear term: cubic coefficient and gauge equivariance") {
    const auto F = assemble(make_noise(1, 24, 5));
    const auto h0 = unit_mode(F.basis(), 0);
    const auto cube = nonlinear_term(F, h0, 1.0);
    CHECK_THAT(cube.coeffs[0].real(),
               Catch::Matchers::WithinAbs(1.0 / std::sqrt(2.0 * kPi), 1e-12));

    const auto w = random_field(F.basis(), 8);
    const complex phase = std::polar(1.0, 0.9);
    SpectralField wp{w.basis, phase * w.coeffs};
    const auto a = nonlinear_term(F, wp, 0.7);
    const auto b = nonlinear_term(F, w, 0.7);
    CHECK((a.coeffs - phase * b.coeffs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("energy anchors") {
    const auto F = assemble(make_noise(1, 64, 9));
    const auto eig = eigen_lowest(F, 1);
    const double m = 0.7;
    SpectralField u{F.basis(), std::sqrt(2.0 * m) * eig.fields[0].coeffs};
    const ProblemParams p0(0.0, 1.0);
    CHECK_THAT(energy(F, u, p0), Catch::Matchers::WithinRel(m * eig.values[0], 1e-9));
    CHECK(energy(F, zero_field(F.basis()), p0) == 0.0);
}

TEST_CASE("diamagnetic inequality for the energy") {
    const auto F1 = assemble(make_noise(1, 48, 13));
    const auto F2 = assemble(make_noise(2, 12, 13));
    const ProblemParams p(1.0, 1.0);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto u1 = random_field(F1.basis(), 20 + s, 0.3);
        CHECK(energy(F1, modulus_field(F1, u1), p) <= energy(F1, u1, p) + 1e-8);
        const auto u2 = random_field(F2.basis(), 40 + s, 0.35);
        CHECK(energy(F2, modulus_field(F2, u2), p) <= energy(F2, u2, p) + 1e-8);
    }
}

TEST_CASE("action family consistency") {
    const auto F = assemble(make_noise(1, 48, 2));
    const double mu0 = eigen_lowest(F, 1).values[0];
    const ProblemParams p(1.3, 0.8, -mu0 + 1.5);
    const auto u = random_field(F.basis(), 31);

    const double P = P_omega(F, u, p.omega);
    const double Q = Q_func(F, u, p.gamma);
    const double S = action(F, u, p);
    const double I = nehari_I(F, u, p);
    CHECK_THAT(S, Catch::Matchers::WithinRel(0.5 * P - p.lambda / (2 * p.gamma + 2) * Q, 1e-12));
    CHECK_THAT(I, Catch::Matchers::WithinRel(P - p.lambda * Q, 1e-12));

    // J is invariant under amplitude scaling
    SpectralField au{u.basis, 3.7 * u.coeffs};
    CHECK_THAT(J_omega(F, au, p.omega, p.gamma),
               Catch::Matchers::WithinRel(J_omega(F, u, p.omega, p.gamma), 1e-10));

    // lambda = 0: I = P
    const ProblemParams pfree(0.0, p.gamma, p.omega);
    CHECK_THAT(nehari_I(F, u, pfree), Catch::Matchers::WithinRel(P, 1e-12));

    CHECK_THROWS_AS(J_omega(F, zero_field(F.basis()), p.omega, p.gamma), ZeroFieldError);
}

TEST_CASE("nehari scaling: t_u u lies on the manifold and maximizes the action") {
    const auto F = assemble(make_noise(1, 48, 6));
    const double mu0 = eigen_lowest(F, 1).values[0];
    const ProblemParams p(1.0, 1.0, -mu0 + 1.0);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto u = random_field(F.basis(), 100 + s, 0.2);
        const double t = t_nehari(F, u, p);
        SpectralField tu{u.basis, t * u.coeffs};
        CHECK(std::abs(nehari_I(F, tu, p)) <= 1e-8 * P_omega(F, tu, p.omega));
        // on the manifold: S = gamma/(2 gamma + 2) lambda Q and t = 1
        CHECK_THAT(action(F, tu, p),
                   Catch::Matchers::WithinRel(
                       p.gamma / (2 * p.gamma + 2) * p.lambda * Q_func(F, tu, p.gamma), 1e-9));
        CHECK_THAT(t_nehari(F, tu, p), Catch::Matchers::WithinAbs(1.0, 1e-10));
        // line-search oracle
        const double tg = golden_section_t(F, u, p);
        CHECK_THAT(t, Catch::Matchers::WithinRel(tg, 1e-6));
    }
    CHECK_THROWS_AS(t_nehari(F, random_field(F.basis(), 1), ProblemParams(-1.0, 1.0, 1.0)), SignError);
}

TEST_CASE("energy gradient matches central differences") {
    const auto F1 = assemble(make_noise(1, 32, 17));
    const auto F2 = assemble(make_noise(2, 8, 17));
    const double eps = 1e-5;
    int trial = 0;
    for (const AndersonForm* F : {&F1, &F2}) {
        const ProblemParams p(0.8, (F->dim() == 1) ? 1.5 : 1.0);
        for (int t = 0; t < 25; ++t, ++trial) {
            const auto u = random_field(F->basis(), 200 + trial, 0.2);
            const auto w = random_field(F->basis(), 500 + trial, 0.2);
            const auto g = energy_gradient(*F, u, p);
            const double directional = (w.coeffs.adjoint() * g.coeffs)(0, 0).real();
            SpectralField up{u.basis, u.coeffs + eps * w.coeffs};
            SpectralField dn{u.basis, u.coeffs - eps * w.coeffs};
            const double fd = (energy(*F, up, p) - energy(*F, dn, p)) / (2 * eps);
            CHECK_THAT(directional, Catch::Matchers::WithinRel(fd, 1e-5));
        }
    }
}

TEST_CASE("gradient at the linear ground state") {
    const auto F = assemble(make_noise(1, 48, 23));
    const auto eig = eigen_lowest(F, 1);
    const auto g = energy_gradient(F, eig.fields[0], ProblemParams(0.0, 1.0));
    CHECK((g.coeffs - eig.values[0] * eig.fields[0].coeffs).norm() <= 1e-8);
}

TEST_CASE("frequency formula identity") {
    const auto F = assemble(make_noise(1, 40, 29));
    const ProblemParams p(0.9, 1.2);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto u = random_field(F.basis(), 300 + s, 0.15);
        CHECK_THAT(omega_energy_formula(F, u, p),
                   Catch::Matchers::WithinRel(omega_rayleigh(F, u, p), 1e-10));
    }
}

TEST_CASE("gauge invariance of all functionals") {
    const auto F = assemble(make_noise(2, 10, 37));
    const double mu0 = eigen_lowest(F, 1).values[0];
    const ProblemParams p(1.0, 1.0, -mu0 + 2.0);
    const auto u = random_field(F.basis(), 7, 0.2);
    const complex phase = std::polar(1.0, 2.2);
    SpectralField up{u.basis, phase * u.coeffs};
    CHECK_THAT(mass(F, up), Catch::Matchers::WithinRel(mass(F, u), 1e-10));
    CHECK_THAT(energy(F, up, p), Catch::Matchers::WithinRel(energy(F, u, p), 1e-10));
    CHECK_THAT(action(F, up, p), Catch::Matchers::WithinRel(action(F, u, p), 1e-10));
    CHECK_THAT(P_omega(F, up, p.omega), Catch::Matchers::WithinRel(P_omega(F, u, p.omega), 1e-10));
    CHECK_THAT(Q_func(F, up, p.gamma), Catch::Matchers::WithinRel(Q_func(F, u, p.gamma), 1e-10));
    CHECK_THAT(J_omega(F, up, p.omega, p.gamma),
               Catch::Matchers::WithinRel(J_omega(F, u, p.omega, p.gamma), 1e-10));
}

TEST_CASE("scale_field: identity, mass preservation, alias guard") {
    const auto F = assemble(make_noise(1, 64, 0, /*zero=*/true));
    const auto u = banded_field(F.basis(), 11, 6);
    const auto same = scale_field(F, u, 1.0);
    CHECK((same.coeffs - u.coeffs).cwiseAbs().maxCoeff() <= 1e-10);
    for (double alpha : {0.5, 2.0}) {
        const auto ua = scale_field(F, u, alpha);
        CHECK_THAT(mass(F, ua), Catch::Matchers::WithinAbs(mass(F, u), 1e-8));
    }
    CHECK_THROWS_AS(scale_field(F, u, 64.0), AliasError);
}

TEST_CASE("scaled L^p integrals approach the frozen-noise limit") {
    // int |u_alpha|^q carries the scaling factor alpha^{d(q-2)/2}; the
    // normalized integral converges to rho(0)^q int |v|^q.
    const auto F = assemble(make_noise(2, 24, 41));
    const auto v = banded_field(F.basis(), 13, 4, /*complex_valued=*/false);
    const double rho0 = rho_at(*F.noise, {0.0, 0.0});
    const Grid& g = F.grid();
    const VectorXcd vals = synthesize(v, g);
    double v4 = 0.0;
    for (long p = 0; p < g.point_count(); ++p) v4 += g.weight(p) * std::pow(std::abs(vals[p]), 4.0);
    const double limit = std::pow(rho0, 4.0) * v4;

    double prev_err = std::numeric_limits<double>::infinity();
    for (double alpha : {4.0, 8.0, 16.0}) {
        const double normalized = scaled_lp_integral(F, v, alpha, 4.0) / (alpha * alpha);
        const double err = std::abs(normalized - limit) / limit;
        CHECK(err <= prev_err + 1e-12);
        prev_err = err;
        if (alpha == 16.0) CHECK(err <= 0.05);
    }
}

TEST_CASE("scaled probe agrees with direct evaluation at alpha = 1") {
    const auto F = assemble(make_noise(2, 12, 43));
    const ProblemParams p(1.0, 1.0);
    const auto u = banded_field(F.basis(), 3, 6);
    const auto probe = scaled_probe(F, u, 1.0, p);
    CHECK_THAT(probe.mass, Catch::Matchers::WithinRel(mass(F, u), 1e-8));
    CHECK_THAT(probe.energy, Catch::Matchers::WithinRel(energy(F, u, p), 1e-7));
}

TEST_CASE("scaling transform norm bound") {
    const auto F = assemble(make_noise(2, 24, 47));
    const auto u = banded_field(F.basis(), 5, 4);
    const auto snorm = [&](const SpectralField& f) {
        return std::sqrt(f.coeffs.real().dot(F.S * f.coeffs.real()) +
                         f.coeffs.imag().dot(F.S * f.coeffs.imag()));
    };
    const double base = snorm(u);
    double C = 0.0;
    for (double alpha : {1.25, 1.5, 2.0}) {
        const double ratio = snorm(scale_field(F, u, alpha)) / (alpha * base);
        CHECK(std::isfinite(ratio));
        C = std::max(C, ratio);
    }
    CHECK(C < 10.0);
}

TEST_CASE("free quadratic form matrices sum to the oscillator") {
    for (const Basis b : {Basis(1, 12), Basis(2, 7)}) {
        const MatrixXd sum = kinetic_matrix(b) + moment2_matrix(b);
        for (long i = 0; i < b.mode_count(); ++i)
            for (long j = 0; j < b.mode_count(); ++j)
                CHECK_THAT(sum(i, j),
                           Catch::Matchers::WithinAbs(i == j ? b.eigenvalue(i) : 0.0, 1e-13));
    }
    // kinetic matrix matches quadrature of grad h_j . grad h_k
    const Basis b(2, 6);
    const Grid g = make_grid(b);
    const MatrixXd K = kinetic_matrix(b);
    for (long i : {0L, 3L, 9L}) {
        const auto gi = gradient_values(g, b, unit_mode(b, i).coeffs);
        for (long j : {0L, 5L}) {
            const auto gj = gradient_values(g, b, unit_mode(b, j).coeffs);
            double acc = 0.0;
            for (long p = 0; p < g.point_count(); ++p)
                acc += g.weight(p) * (gi[0][p].real() * gj[0][p].real() +
                                      gi[1][p].real() * gj[1][p].real());
            CHECK_THAT(K(i, j), Catch::Matchers::WithinAbs(acc, 1e-10));
        }
    }
}
