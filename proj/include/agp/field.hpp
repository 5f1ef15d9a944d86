// field.hpp — spectral fields (coefficient vectors on the truncated basis),
// fractional powers of -H, and Hermite-Sobolev W^{s,2} norms.

#pragma once

#include <random>
#include <string>

#include <json.hpp>

#include "agp/grid.hpp"

namespace agp {

struct SpectralField {
    Basis basis;
    VectorXcd coeffs;

    SpectralField() = default;
    SpectralField(const Basis& b, VectorXcd c) : basis(b), coeffs(std::move(c)) {
        if (coeffs.size() != basis.mode_count())
            throw ShapeError("SpectralField: coefficient count does not match basis");
    }
};

inline SpectralField zero_field(const Basis& b) {
    return {b, VectorXcd::Zero(b.mode_count())};
}

inline SpectralField unit_mode(const Basis& b, long index) {
    VectorXcd c = VectorXcd::Zero(b.mode_count());
    c[index] = 1.0;
    return {b, std::move(c)};
}

inline void check_same_basis(const SpectralField& a, const SpectralField& b) {
    if (!(a.basis == b.basis)) throw BasisMismatch("fields live on different bases");
}

inline VectorXcd synthesize(const SpectralField& f, const Grid& g) {
    return synthesize_on(g, f.basis, f.coeffs);
}

inline SpectralField analyze(const VectorXcd& values, const Grid& g, const Basis& basis) {
    return {basis, analyze_on(g, basis, values)};
}

// c_k -> (lambda_k^2)^{s/2} c_k
inline SpectralField neg_H_pow(const SpectralField& f, double s) {
    VectorXcd c = f.coeffs;
    for (long i = 0; i < f.basis.mode_count(); ++i) c[i] *= std::pow(f.basis.eigenvalue(i), 0.5 * s);
    return {f.basis, std::move(c)};
}

// |u|_{W^{s,2}} = (sum_k (lambda_k^2)^s |c_k|^2)^{1/2}
inline double sobolev_norm(const SpectralField& f, double s) {
    double acc = 0.0;
    for (long i = 0; i < f.basis.mode_count(); ++i)
        acc += std::pow(f.basis.eigenvalue(i), s) * std::norm(f.coeffs[i]);
    return std::sqrt(acc);
}

inline double l2_norm(const SpectralField& f) { return f.coeffs.norm(); }

inline complex inner(const SpectralField& a, const SpectralField& b) {
    check_same_basis(a, b);
    return (b.coeffs.adjoint() * a.coeffs)(0, 0);
}

// Largest total degree carrying coefficients above 1e-12 * ||c||_2;
// sqrt(2 g + d) is the field's effective spectral/spatial radius.
inline int effective_grade(const SpectralField& f) {
    const double floor = 1e-12 * f.coeffs.norm();
    int gmax = 0;
    for (long i = 0; i < f.basis.mode_count(); ++i)
        if (std::abs(f.coeffs[i]) > floor) gmax = std::max(gmax, f.basis.grade(i));
    return gmax;
}

// Test-style random field with a decaying coefficient envelope.
inline SpectralField random_field(const Basis& b, std::uint64_t seed, double decay = 0.15,
                                  bool complex_valued = true) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXcd c(b.mode_count());
    for (long i = 0; i < b.mode_count(); ++i) {
        const double env = std::exp(-decay * b.grade(i));
        const double re = normal(rng) * env;
        const double im = complex_valued ? normal(rng) * env : 0.0;
        c[i] = complex(re, im);
    }
    return {b, std::move(c)};
}

inline nlohmann::json field_to_json(const SpectralField& f) {
    nlohmann::json j;
    j["dim"] = f.basis.dim;
    j["cutoff"] = f.basis.cutoff;
    j["enumeration"] = kEnumerationVersion;
    auto& coeffs = j["coeffs"] = nlohmann::json::array();
    for (long i = 0; i < f.basis.mode_count(); ++i)
        coeffs.push_back({f.coeffs[i].real(), f.coeffs[i].imag()});
    return j;
}

inline SpectralField field_from_json(const nlohmann::json& j, double oversample = 2.0) {
    if (j.at("enumeration").get<std::string>() != kEnumerationVersion)
        throw ValidationError("field_from_json: unknown enumeration version");
    const Basis b(j.at("dim").get<int>(), j.at("cutoff").get<int>(), oversample);
    const auto& coeffs = j.at("coeffs");
    if (static_cast<long>(coeffs.size()) != b.mode_count())
        throw ShapeError("field_from_json: coefficient count does not match basis");
    VectorXcd c(b.mode_count());
    for (long i = 0; i < b.mode_count(); ++i)
        c[i] = complex(coeffs[i][0].get<double>(), coeffs[i][1].get<double>());
    return {b, std::move(c)};
}

} // namespace agp
