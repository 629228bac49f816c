#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gearstab/errors.hpp"
#include "gearstab/linalg.hpp"
#include "gearstab/methods.hpp"

namespace gearstab {

struct LocusSample {
    double theta;
    Complex sigma;
};

/// Sampled boundary curve sigma(theta) = rho(e^{i theta}) / s(e^{i theta}), theta in [0, 2 pi].
struct StabilityLocus {
    LinearMultistepMethod method;  // used to refine intersections on the exact curve
    int method_order = 0;
    std::vector<LocusSample> samples;
    bool closed = false;
};

struct StiffStabilityReport {
    double delta = std::numeric_limits<double>::quiet_NaN();
    bool delta_defined = false;
    bool stiffly_stable = false;
    std::vector<Complex> self_intersections;
};

inline constexpr double kRootConditionTol = 1e-9;
inline constexpr double kSimpleRootSeparation = 1e-6;

namespace detail {

/// rho and s as double-precision complex polynomials.
struct CharacteristicPair {
    ComplexPolynomial rho;
    ComplexPolynomial s;
};

inline CharacteristicPair characteristic_pair(const LinearMultistepMethod& m) {
    const auto [rho, s] = rho_sigma_polynomials(m);
    std::vector<Complex> rc;
    std::vector<Complex> sc;
    for (const auto& c : rho.coeffs) rc.emplace_back(c.to_double());
    for (const auto& c : s.coeffs) sc.emplace_back(c.to_double());
    return {ComplexPolynomial(rc), ComplexPolynomial(sc)};
}

inline Complex locus_point(const CharacteristicPair& cp, double theta) {
    const Complex z = std::polar(1.0, theta);
    const Complex den = cp.s(z);
    if (std::abs(den) < 1e-14)
        throw DegenerateDenominatorError("boundary_locus: s(e^{i theta}) vanishes at theta=" + std::to_string(theta),
                                         theta);
    return cp.rho(z) / den;
}

inline double theta_at(std::size_t k, std::size_t n) {
    if (k == n) return 2.0 * std::numbers::pi;
    return 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
}

}  // namespace detail

/// Characteristic polynomial rho(z) - sigma s(z) of the method on y' = lambda y, sigma = h lambda.
inline ComplexPolynomial characteristic_polynomial(const LinearMultistepMethod& m, Complex sigma) {
    const auto cp = detail::characteristic_pair(m);
    const auto& r = cp.rho.coefficients();
    const auto& s = cp.s.coefficients();
    std::vector<Complex> c(std::max(r.size(), s.size()), Complex{0.0});
    for (std::size_t i = 0; i < r.size(); ++i) c[i] += r[i];
    for (std::size_t i = 0; i < s.size(); ++i) c[i] -= sigma * s[i];
    return ComplexPolynomial(std::move(c));
}

/// sigma(theta) for a single angle.
inline Complex boundary_point(const LinearMultistepMethod& m, double theta) {
    return detail::locus_point(detail::characteristic_pair(m), theta);
}

/// Samples the boundary locus at num_samples + 1 uniformly spaced angles spanning [0, 2 pi].
inline StabilityLocus boundary_locus(const LinearMultistepMethod& m, std::size_t num_samples) {
    if (num_samples < 16) throw DomainError("boundary_locus: num_samples must be at least 16");
    const auto cp = detail::characteristic_pair(m);
    StabilityLocus locus;
    locus.method = m;
    locus.method_order = m.order;
    locus.samples.reserve(num_samples + 1);
    for (std::size_t k = 0; k <= num_samples; ++k) {
        const double theta = detail::theta_at(k, num_samples);
        // Evaluate the mirrored half through theta_k directly; conjugation keeps the symmetry exact.
        if (2 * k > num_samples) {
            const Complex mirrored = locus.samples[num_samples - k].sigma;
            locus.samples.push_back({theta, std::conj(mirrored)});
        } else {
            locus.samples.push_back({theta, detail::locus_point(cp, theta)});
        }
    }
    locus.closed = std::abs(locus.samples.front().sigma - locus.samples.back().sigma) < 1e-12;
    return locus;
}

/// Root condition on rho(z) - sigma s(z): all roots strictly inside the unit
/// disk, or on the boundary (within tol) and simple.
inline bool is_absolutely_stable(const LinearMultistepMethod& m, Complex sigma) {
    const ComplexPolynomial p = characteristic_polynomial(m, sigma);
    if (p.degree() < m.steps())
        throw DegreeCollapseError("is_absolutely_stable: leading coefficient of P(z) vanishes at this sigma");
    const auto roots = polynomial_roots(p);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const double mod = std::abs(roots[i]);
        if (mod < 1.0 - kRootConditionTol) continue;
        if (mod > 1.0 + kRootConditionTol) return false;
        for (std::size_t j = 0; j < roots.size(); ++j)
            if (j != i && std::abs(roots[i] - roots[j]) <= kSimpleRootSeparation) return false;
    }
    return true;
}

/// delta = min over theta of Re sigma(theta): dense sampling then golden-section
/// refinement around every sampled local minimum. Values within 1e-13 of zero snap to 0.
inline double stiff_stability_abscissa(const LinearMultistepMethod& m, std::size_t num_samples = 4096) {
    if (m.family != MethodFamily::BDF || m.order < 1 || m.order > 6)
        throw DomainError("stiff_stability_abscissa: defined for BDF orders 1..6");
    num_samples = std::max<std::size_t>(num_samples, 4096);
    const auto cp = detail::characteristic_pair(m);
    auto re = [&](double theta) { return detail::locus_point(cp, theta).real(); };

    const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(num_samples);
    std::vector<double> vals(num_samples);
    for (std::size_t k = 0; k < num_samples; ++k) vals[k] = re(detail::theta_at(k, num_samples));

    double best = *std::min_element(vals.begin(), vals.end());
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t k = 0; k < num_samples; ++k) {
        const double prev = vals[(k + num_samples - 1) % num_samples];
        const double next = vals[(k + 1) % num_samples];
        if (vals[k] > prev || vals[k] > next) continue;
        double a = detail::theta_at(k, num_samples) - dtheta;
        double b = a + 2.0 * dtheta;
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double fc = re(c);
        double fd = re(d);
        while (b - a > 1e-10) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = re(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = re(d);
            }
        }
        best = std::min({best, fc, fd, re(0.5 * (a + b))});
    }
    if (best > -1e-13) best = 0.0;
    return best;
}

namespace detail {

inline double cross(Complex o, Complex a, Complex b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

/// Proper crossing of segments p1p2 and p3p4; returns the parameter along p1p2.
inline std::optional<std::pair<double, double>> segment_crossing(Complex p1, Complex p2, Complex p3, Complex p4) {
    const double d1 = cross(p3, p4, p1);
    const double d2 = cross(p3, p4, p2);
    const double d3 = cross(p1, p2, p3);
    const double d4 = cross(p1, p2, p4);
    const bool straddle_a = (d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0);
    const bool straddle_b = (d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0);
    if (!straddle_a || !straddle_b) return std::nullopt;
    return std::make_pair(d1 / (d1 - d2), d3 / (d3 - d4));
}

}  // namespace detail

/// Crossings between non-adjacent polyline segments of a locus, each refined
/// by bisection of both parameter intervals to 1e-8 on the exact curve.
/// The closure point theta = 0 / 2 pi is not reported.
inline std::vector<Complex> find_self_intersections(const StabilityLocus& locus) {
    const auto& s = locus.samples;
    if (s.size() < 1025) throw DomainError("find_self_intersections: locus needs at least 1024 samples");
    const std::size_t nseg = s.size() - 1;
    const auto cp = detail::characteristic_pair(locus.method);

    struct Box {
        double xmin, xmax, ymin, ymax;
        std::size_t idx;
    };
    std::vector<Box> boxes;
    boxes.reserve(nseg);
    for (std::size_t i = 0; i < nseg; ++i) {
        const Complex a = s[i].sigma;
        const Complex b = s[i + 1].sigma;
        boxes.push_back({std::min(a.real(), b.real()), std::max(a.real(), b.real()), std::min(a.imag(), b.imag()),
                         std::max(a.imag(), b.imag()), i});
    }
    std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
        return a.xmin < b.xmin || (a.xmin == b.xmin && a.idx < b.idx);
    });

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t u = 0; u < boxes.size(); ++u) {
        for (std::size_t v = u + 1; v < boxes.size() && boxes[v].xmin <= boxes[u].xmax; ++v) {
            if (boxes[v].ymin > boxes[u].ymax || boxes[v].ymax < boxes[u].ymin) continue;
            std::size_t i = boxes[u].idx;
            std::size_t j = boxes[v].idx;
            if (i > j) std::swap(i, j);
            if (j - i < 2) continue;
            if (i == 0 && j == nseg - 1) continue;
            if (detail::segment_crossing(s[i].sigma, s[i + 1].sigma, s[j].sigma, s[j + 1].sigma))
                pairs.emplace_back(i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<Complex> out;
    for (const auto& [i, j] : pairs) {
        double a0 = s[i].theta, a1 = s[i + 1].theta;
        double b0 = s[j].theta, b1 = s[j + 1].theta;
        Complex pa0 = s[i].sigma, pa1 = s[i + 1].sigma;
        Complex pb0 = s[j].sigma, pb1 = s[j + 1].sigma;
        while (std::max(a1 - a0, b1 - b0) > 1e-8) {
            const double am = 0.5 * (a0 + a1);
            const double bm = 0.5 * (b0 + b1);
            const Complex pam = detail::locus_point(cp, am);
            const Complex pbm = detail::locus_point(cp, bm);
            // Keep the half-interval pair whose chords still cross; fall back to the
            // pair whose chord intersection parameters are closest to [0,1].
            struct Cand {
                double a0, a1, b0, b1;
                Complex pa0, pa1, pb0, pb1;
            };
            const Cand cands[4] = {{a0, am, b0, bm, pa0, pam, pb0, pbm},
                                   {a0, am, bm, b1, pa0, pam, pbm, pb1},
                                   {am, a1, b0, bm, pam, pa1, pb0, pbm},
                                   {am, a1, bm, b1, pam, pa1, pbm, pb1}};
            int pick = -1;
            for (int c = 0; c < 4 && pick < 0; ++c)
                if (detail::segment_crossing(cands[c].pa0, cands[c].pa1, cands[c].pb0, cands[c].pb1)) pick = c;
            if (pick < 0) {
                double best_gap = std::numeric_limits<double>::infinity();
                for (int c = 0; c < 4; ++c) {
                    const Complex mid_a = 0.5 * (cands[c].pa0 + cands[c].pa1);
                    const Complex mid_b = 0.5 * (cands[c].pb0 + cands[c].pb1);
                    const double gap = std::abs(mid_a - mid_b);
                    if (gap < best_gap) {
                        best_gap = gap;
                        pick = c;
                    }
                }
            }
            const Cand& c = cands[pick];
            a0 = c.a0, a1 = c.a1, b0 = c.b0, b1 = c.b1;
            pa0 = c.pa0, pa1 = c.pa1, pb0 = c.pb0, pb1 = c.pb1;
        }
        if (const auto t = detail::segment_crossing(pa0, pa1, pb0, pb1)) out.push_back(pa0 + t->first * (pa1 - pa0));
        else out.push_back(0.25 * (pa0 + pa1 + pb0 + pb1));
    }
    return out;
}

/// Stiff stability: no self-intersections of the locus plus the root
/// condition at probe points delta-1, delta-10, delta-100 and -1e6.
inline StiffStabilityReport is_stiffly_stable(const LinearMultistepMethod& m, std::size_t num_samples = 8192) {
    if (m.family != MethodFamily::BDF || m.order < 1 || m.order > 7)
        throw DomainError("is_stiffly_stable: defined for BDF orders 1..7");
    StiffStabilityReport rep;
    const auto locus = boundary_locus(m, num_samples);
    rep.self_intersections = find_self_intersections(locus);

    double probe_origin = 0.0;
    if (m.order <= 6) {
        rep.delta = stiff_stability_abscissa(m);
        rep.delta_defined = true;
        probe_origin = rep.delta;
    } else {
        for (const auto& smp : locus.samples) probe_origin = std::min(probe_origin, smp.sigma.real());
    }

    bool probes_ok = true;
    for (const double sigma : {probe_origin - 1.0, probe_origin - 10.0, probe_origin - 100.0, -1e6})
        probes_ok = probes_ok && is_absolutely_stable(m, Complex(sigma, 0.0));
    rep.stiffly_stable = rep.self_intersections.empty() && probes_ok;
    return rep;
}

/// max |Re lambda| / min |Re lambda| over an asymptotically stable spectrum.
inline double stiffness_ratio(const std::vector<Complex>& eigenvalues) {
    if (eigenvalues.empty()) throw DomainError("stiffness_ratio: empty eigenvalue list");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& l : eigenvalues) {
        if (!(l.real() < 0.0))
            throw NotAsymptoticallyStableError("stiffness_ratio: eigenvalue with non-negative real part", l);
        lo = std::min(lo, std::abs(l.real()));
        hi = std::max(hi, std::abs(l.real()));
    }
    if (lo < 1e-300) throw DomainError("stiffness_ratio: degenerate minimum |Re lambda|");
    return hi / lo;
}

}  // namespace gearstab
