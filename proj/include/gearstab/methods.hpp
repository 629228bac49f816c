#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gearstab/errors.hpp"
#include "gearstab/rational.hpp"

namespace gearstab {

enum class MethodFamily { BDF, AdamsMoulton };

/// Polynomial with exact rational coefficients, ascending degree.
struct RationalPolynomial {
    std::vector<Rational> coeffs;

    [[nodiscard]] std::size_t degree() const {
        for (std::size_t i = coeffs.size(); i-- > 0;)
            if (!coeffs[i].is_zero()) return i;
        return 0;
    }

    [[nodiscard]] Rational operator()(const Rational& z) const {
        Rational acc{0};
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * z + coeffs[i];
        return acc;
    }

    [[nodiscard]] RationalPolynomial derivative() const {
        RationalPolynomial d;
        for (std::size_t i = 1; i < coeffs.size(); ++i)
            d.coeffs.push_back(coeffs[i] * Rational(static_cast<std::int64_t>(i)));
        if (d.coeffs.empty()) d.coeffs.push_back(Rational{0});
        return d;
    }

    friend RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b) {
        RationalPolynomial r;
        r.coeffs.assign(a.coeffs.size() + b.coeffs.size() - 1, Rational{0});
        for (std::size_t i = 0; i < a.coeffs.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs.size(); ++j) r.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
        return r;
    }

    /// Definite integral over [lo, hi].
    [[nodiscard]] Rational integrate(const Rational& lo, const Rational& hi) const {
        RationalPolynomial anti;
        anti.coeffs.push_back(Rational{0});
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            anti.coeffs.push_back(coeffs[i] / Rational(static_cast<std::int64_t>(i + 1)));
        return anti(hi) - anti(lo);
    }
};

/// Linear multistep method in the normalized form
///
///   y_{n+1} = sum_{i=1}^{k} alpha_i y_{n-i+1} + h sum_{j=0}^{k} beta_j f_{n-j+1}
///
/// where k = steps(). `alphas` holds alpha_1..alpha_k and `betas` holds
/// beta_0..beta_k (always k+1 entries, padded with zeros).
struct LinearMultistepMethod {
    MethodFamily family = MethodFamily::BDF;
    int order = 1;
    std::vector<Rational> alphas;
    std::vector<Rational> betas;

    [[nodiscard]] std::size_t steps() const { return alphas.size(); }

    [[nodiscard]] std::vector<double> alpha_values() const {
        std::vector<double> v;
        v.reserve(alphas.size());
        for (const auto& a : alphas) v.push_back(a.to_double());
        return v;
    }
    [[nodiscard]] std::vector<double> beta_values() const {
        std::vector<double> v;
        v.reserve(betas.size());
        for (const auto& b : betas) v.push_back(b.to_double());
        return v;
    }

    [[nodiscard]] std::string name() const {
        return (family == MethodFamily::BDF ? "BDF" : "AM") + std::to_string(order);
    }

    friend bool operator==(const LinearMultistepMethod&, const LinearMultistepMethod&) = default;
};

namespace detail {

inline std::int64_t binomial(int n, int k) {
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace detail

/// BDF (Gear) method of order 1..7, derived from
/// sum_{j=1}^{q} (1/j) nabla^j y_{n+1} = h f_{n+1}.
inline LinearMultistepMethod bdf_coefficients(int order) {
    if (order < 1 || order > 7)
        throw DomainError("bdf_coefficients: order must be in 1..7, got " + std::to_string(order));

    // c[k] is the weight of y_{n+1-k} in the generating relation.
    std::vector<Rational> c(static_cast<std::size_t>(order) + 1, Rational{0});
    for (int j = 1; j <= order; ++j) {
        const Rational inv_j(1, j);
        for (int k = 0; k <= j; ++k) {
            const std::int64_t sign = (k % 2 == 0) ? 1 : -1;
            c[static_cast<std::size_t>(k)] += inv_j * Rational(sign * detail::binomial(j, k));
        }
    }

    LinearMultistepMethod m;
    m.family = MethodFamily::BDF;
    m.order = order;
    for (int k = 1; k <= order; ++k) m.alphas.push_back(-c[static_cast<std::size_t>(k)] / c[0]);
    m.betas.assign(static_cast<std::size_t>(order) + 1, Rational{0});
    m.betas[0] = Rational{1} / c[0];
    return m;
}

/// Adams-Moulton method with q+1 derivative terms (order q+1), q in 0..5.
/// beta_j integrates the Lagrange basis through x_{n+1}, x_n, ..., x_{n-q+1} over [x_n, x_{n+1}].
inline LinearMultistepMethod adams_moulton_coefficients(int q) {
    if (q < 0 || q > 5)
        throw DomainError("adams_moulton_coefficients: q must be in 0..5, got " + std::to_string(q));

    const int k = q < 1 ? 1 : q;
    // Nodes in units of h relative to x_n: x_{n-j+1} -> 1 - j.
    std::vector<Rational> nodes;
    for (int j = 0; j <= q; ++j) nodes.emplace_back(1 - j);

    LinearMultistepMethod m;
    m.family = MethodFamily::AdamsMoulton;
    m.order = q + 1;
    m.alphas.assign(static_cast<std::size_t>(k), Rational{0});
    m.alphas[0] = Rational{1};
    m.betas.assign(static_cast<std::size_t>(k) + 1, Rational{0});
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        RationalPolynomial basis{{Rational{1}}};
        for (std::size_t l = 0; l < nodes.size(); ++l) {
            if (l == j) continue;
            const Rational scale = Rational{1} / (nodes[j] - nodes[l]);
            basis = basis * RationalPolynomial{{-nodes[l] * scale, scale}};
        }
        m.betas[j] = basis.integrate(Rational{0}, Rational{1});
    }
    return m;
}

/// rho(z) = z^k - sum alpha_i z^{k-i} and s(z) = sum beta_j z^{k-j}.
/// The characteristic polynomial of y' = lambda y with sigma = h lambda is rho(z) - sigma s(z).
inline std::pair<RationalPolynomial, RationalPolynomial> rho_sigma_polynomials(const LinearMultistepMethod& m) {
    const std::size_t k = m.steps();
    RationalPolynomial rho;
    RationalPolynomial s;
    rho.coeffs.assign(k + 1, Rational{0});
    s.coeffs.assign(k + 1, Rational{0});
    rho.coeffs[k] = Rational{1};
    for (std::size_t i = 1; i <= k; ++i) rho.coeffs[k - i] = -m.alphas[i - 1];
    for (std::size_t j = 0; j <= k; ++j) s.coeffs[k - j] = m.betas[j];
    return {rho, s};
}

/// Residual of one step applied to y(x) = x^power with h = 1 and x_{n+1} = shift:
/// y(x_{n+1}) - sum alpha_i y(x_{n-i+1}) - sum beta_j y'(x_{n-j+1}). Zero for power <= order.
inline Rational step_residual(const LinearMultistepMethod& m, unsigned power, const Rational& shift) {
    auto y = [&](const Rational& x) { return pow(x, power); };
    auto dy = [&](const Rational& x) {
        return power == 0 ? Rational{0} : Rational(static_cast<std::int64_t>(power)) * pow(x, power - 1);
    };
    Rational r = y(shift);
    for (std::size_t i = 1; i <= m.alphas.size(); ++i)
        r -= m.alphas[i - 1] * y(shift - Rational(static_cast<std::int64_t>(i)));
    for (std::size_t j = 0; j < m.betas.size(); ++j)
        r -= m.betas[j] * dy(shift - Rational(static_cast<std::int64_t>(j)));
    return r;
}

/// Leading local truncation error constant C_{p+1}: the step residual on x^{p+1}/(p+1)!.
inline Rational error_constant(const LinearMultistepMethod& m) {
    const unsigned p1 = static_cast<unsigned>(m.order) + 1;
    std::int64_t fact = 1;
    for (unsigned i = 2; i <= p1; ++i) fact *= i;
    return step_residual(m, p1, Rational{0}) / Rational(fact);
}

}  // namespace gearstab
