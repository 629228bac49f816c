#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gearstab/errors.hpp"
#include "gearstab/linalg.hpp"
#include "gearstab/methods.hpp"

namespace gearstab {

using Vector = std::vector<double>;

/// Initial value problem y' = F(x, y), y(x0) = y0 on [x0, x_end].
struct OdeProblem {
    std::size_t dimension = 0;
    std::function<Vector(double, const Vector&)> rhs;
    std::function<Matrix(double, const Vector&)> jacobian;  // optional
    double x0 = 0.0;
    Vector y0;
    double x_end = 1.0;
    std::function<Vector(double)> exact;  // optional, for test problems

    void validate() const {
        if (dimension == 0) throw DomainError("OdeProblem: dimension must be positive");
        if (!rhs) throw DomainError("OdeProblem: missing right-hand side");
        if (!(x_end > x0)) throw DomainError("OdeProblem: x_end must exceed x0");
        if (y0.size() != dimension) throw DomainError("OdeProblem: y0 length does not match dimension");
    }
};

enum class TraceStatus { Completed, StepSizeUnderflow, NewtonFailure };

inline const char* to_string(TraceStatus s) {
    switch (s) {
        case TraceStatus::Completed: return "Completed";
        case TraceStatus::StepSizeUnderflow: return "StepSizeUnderflow";
        case TraceStatus::NewtonFailure: return "NewtonFailure";
    }
    return "?";
}

/// Accepted steps of one run. Entry 0 is (x0, y0) with h = 0 and order = 0.
struct IntegrationTrace {
    std::vector<double> xs;
    std::vector<Vector> ys;
    std::vector<double> hs;
    std::vector<int> orders;
    std::vector<int> newton_iters;
    TraceStatus status = TraceStatus::Completed;
    std::size_t rejected_steps = 0;

    void record(double x, Vector y, double h, int order, int iters) {
        xs.push_back(x);
        ys.push_back(std::move(y));
        hs.push_back(h);
        orders.push_back(order);
        newton_iters.push_back(iters);
    }
    [[nodiscard]] std::size_t steps() const { return xs.empty() ? 0 : xs.size() - 1; }
};

struct SolverConfig {
    double rtol = 1e-6;
    double atol = 1e-6;
    double h_init = 1e-4;
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    int max_order = 6;
    double newton_tol = 0.1;
    int newton_max_iters = 10;

    void validate() const {
        if (!(rtol > 0.0) || !(atol > 0.0)) throw DomainError("SolverConfig: tolerances must be positive");
        if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max))
            throw DomainError("SolverConfig: need 0 < h_min <= h_init <= h_max");
        if (max_order < 1 || max_order > 6) throw DomainError("SolverConfig: max_order must be in 1..6");
        if (!(newton_tol > 0.0) || newton_max_iters < 1) throw DomainError("SolverConfig: bad Newton settings");
    }
};

/// Tight settings used by the fixed-step driver, where Newton should solve to roundoff.
inline SolverConfig fixed_step_config() {
    SolverConfig c;
    c.rtol = 1e-13;
    c.atol = 1e-13;
    c.newton_tol = 0.01;
    c.newton_max_iters = 25;
    return c;
}

namespace detail {

inline double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline Vector axpy(const Vector& y, double a, const Vector& x) {
    Vector r = y;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * x[i];
    return r;
}

/// Weights c_j with p(x_{n+1}) = sum_j c_j y_{n-j} for the degree-(count-1)
/// interpolant through count uniformly spaced points (newest first).
inline std::vector<double> extrapolation_weights(std::size_t count) {
    std::vector<double> w(count);
    double binom = static_cast<double>(count);  // C(count, 1)
    for (std::size_t j = 0; j < count; ++j) {
        w[j] = (j % 2 == 0 ? 1.0 : -1.0) * binom;
        binom = binom * static_cast<double>(count - j - 1) / static_cast<double>(j + 2);
    }
    return w;
}

inline Vector extrapolate(std::span<const Vector> history_newest_first) {
    const auto w = extrapolation_weights(history_newest_first.size());
    Vector out(history_newest_first.front().size(), 0.0);
    for (std::size_t j = 0; j < w.size(); ++j)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[j] * history_newest_first[j][i];
    return out;
}

}  // namespace detail

/// F(x, y) with length and finiteness checks.
inline Vector evaluate_rhs(const OdeProblem& problem, double x, const Vector& y) {
    Vector f = problem.rhs(x, y);
    if (f.size() != problem.dimension) throw EvaluationError("rhs returned a vector of the wrong length");
    for (const double v : f)
        if (!std::isfinite(v)) throw EvaluationError("rhs returned a non-finite value at x=" + std::to_string(x));
    return f;
}

/// Forward-difference Jacobian with perturbation sqrt(eps) * (1 + |y_j|).
inline Matrix finite_difference_jacobian(const OdeProblem& problem, double x, const Vector& y, const Vector& f0) {
    const std::size_t n = y.size();
    const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    Matrix j(n, n);
    Vector yp = y;
    for (std::size_t c = 0; c < n; ++c) {
        const double delta = root_eps * (1.0 + std::abs(y[c]));
        yp[c] = y[c] + delta;
        const Vector fp = evaluate_rhs(problem, x, yp);
        for (std::size_t r = 0; r < n; ++r) j(r, c) = (fp[r] - f0[r]) / delta;
        yp[c] = y[c];
    }
    return j;
}

inline Vector step_explicit_euler(const OdeProblem& problem, double x, const Vector& y, double h) {
    if (!(h > 0.0)) throw DomainError("step_explicit_euler: h must be positive");
    Vector out = detail::axpy(y, h, evaluate_rhs(problem, x, y));
    for (const double v : out)
        if (!std::isfinite(v)) throw EvaluationError("step_explicit_euler: state overflowed");
    return out;
}

inline Vector step_rk4(const OdeProblem& problem, double x, const Vector& y, double h) {
    if (!(h > 0.0)) throw DomainError("step_rk4: h must be positive");
    const Vector k1 = evaluate_rhs(problem, x, y);
    const Vector k2 = evaluate_rhs(problem, x + 0.5 * h, detail::axpy(y, 0.5 * h, k1));
    const Vector k3 = evaluate_rhs(problem, x + 0.5 * h, detail::axpy(y, 0.5 * h, k2));
    const Vector k4 = evaluate_rhs(problem, x + h, detail::axpy(y, h, k3));
    Vector out = y;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        if (!std::isfinite(out[i])) throw EvaluationError("step_rk4: state overflowed");
    }
    return out;
}

struct ImplicitStepResult {
    Vector y;
    int iters = 0;
};

/// One implicit step of a linear multistep method. History lists are newest
/// first on a uniform grid of spacing h; history_f may be empty when
/// beta_1..beta_k are all zero (BDF). Solves
///   G(y) = y - h beta_0 F(x_{n+1}, y) - psi = 0
/// by damped Newton with iteration matrix I - h beta_0 J.
inline ImplicitStepResult step_lmm_implicit(const LinearMultistepMethod& method, const OdeProblem& problem,
                                            std::span<const double> history_x, std::span<const Vector> history_y,
                                            std::span<const Vector> history_f, double h, const SolverConfig& config,
                                            const std::optional<Vector>& predictor = std::nullopt) {
    const std::size_t k = method.steps();
    if (!(h > 0.0)) throw DomainError("step_lmm_implicit: h must be positive");
    if (history_x.size() < k || history_y.size() < k)
        throw DomainError("step_lmm_implicit: history shorter than the method's step count");
    const auto alphas = method.alpha_values();
    const auto betas = method.beta_values();
    bool needs_f = false;
    for (std::size_t j = 1; j < betas.size(); ++j) needs_f = needs_f || betas[j] != 0.0;
    if (needs_f && history_f.size() < k) throw DomainError("step_lmm_implicit: derivative history too short");

    const std::size_t n = problem.dimension;
    const double x_next = history_x[0] + h;
    const double hb0 = h * betas[0];

    Vector psi(n, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < n; ++c) psi[c] += alphas[i] * history_y[i][c];
    if (needs_f)
        for (std::size_t j = 1; j <= k; ++j)
            for (std::size_t c = 0; c < n; ++c) psi[c] += h * betas[j] * history_f[j - 1][c];

    Vector y = predictor ? *predictor : detail::extrapolate(history_y.first(k));
    Vector f = evaluate_rhs(problem, x_next, y);

    auto residual = [&](const Vector& yy, const Vector& ff) {
        Vector g(n);
        for (std::size_t c = 0; c < n; ++c) g[c] = yy[c] - hb0 * ff[c] - psi[c];
        return g;
    };
    auto iteration_matrix = [&](const Vector& yy, const Vector& ff) {
        const Matrix jac = problem.jacobian ? problem.jacobian(x_next, yy) : finite_difference_jacobian(problem, x_next, yy, ff);
        Matrix m = Matrix::identity(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) m(r, c) -= hb0 * jac(r, c);
        return LuFactorization<double>(std::move(m));
    };

    Vector g = residual(y, f);
    std::optional<LuFactorization<double>> lu{iteration_matrix(y, f)};
    double prev_dnorm = 0.0;
    bool fresh = true;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    for (int iter = 1; iter <= config.newton_max_iters; ++iter) {
        Vector neg_g(n);
        for (std::size_t c = 0; c < n; ++c) neg_g[c] = -g[c];
        const Vector delta = lu->solve(neg_g);
        const double gnorm = detail::max_norm(g);

        double lambda = 1.0;
        Vector y_trial;
        Vector f_trial;
        Vector g_trial;
        for (;;) {
            y_trial = detail::axpy(y, lambda, delta);
            bool ok = true;
            try {
                f_trial = evaluate_rhs(problem, x_next, y_trial);
            } catch (const EvaluationError&) {
                ok = false;
            }
            if (ok) {
                g_trial = residual(y_trial, f_trial);
                if (detail::max_norm(g_trial) <= gnorm || lambda <= 1.0 / 16.0) break;
            } else if (lambda <= 1.0 / 16.0) {
                throw NewtonFailure("step_lmm_implicit: right-hand side failed during Newton", y, iter);
            }
            lambda *= 0.5;
        }
        const double dnorm = lambda * detail::max_norm(delta);
        y = std::move(y_trial);
        f = std::move(f_trial);
        g = std::move(g_trial);

        const double ynorm = detail::max_norm(y);
        if (dnorm <= config.newton_tol * (config.atol + config.rtol * ynorm) || dnorm <= 4.0 * eps * ynorm ||
            detail::max_norm(g) == 0.0)
            return {std::move(y), iter};

        const double rate = iter > 1 && prev_dnorm > 0.0 ? dnorm / prev_dnorm : 0.0;
        if (rate > 0.5 && !fresh) {
            lu.emplace(iteration_matrix(y, f));
            fresh = true;
        } else {
            fresh = false;
        }
        prev_dnorm = dnorm;
    }
    throw NewtonFailure("step_lmm_implicit: Newton did not converge", std::move(y), config.newton_max_iters);
}

enum class Scheme { ExplicitEuler, RK4, BDF, AdamsMoulton };

enum class StartMode {
    Ramp,   // self-starting: order 1, 2, ... until enough history exists
    Exact,  // starting values from problem.exact
};

/// Method of order of accuracy `order` for an implicit scheme (AM order p is Adams-Moulton q = p - 1).
inline LinearMultistepMethod implicit_method(Scheme scheme, int order) {
    if (scheme == Scheme::BDF) return bdf_coefficients(order);
    if (scheme == Scheme::AdamsMoulton) return adams_moulton_coefficients(order - 1);
    throw DomainError("implicit_method: scheme is explicit");
}

/// Fixed-step integration over [x0, x_end] with step h.
inline IntegrationTrace integrate_fixed(const OdeProblem& problem, Scheme scheme, int order, double h,
                                        const SolverConfig& config = fixed_step_config(),
                                        StartMode start = StartMode::Ramp) {
    problem.validate();
    if (!(h > 0.0)) throw DomainError("integrate_fixed: h must be positive");
    const double span = problem.x_end - problem.x0;
    const double count_real = span / h;
    const auto count = static_cast<std::size_t>(std::llround(count_real));
    if (count == 0 || std::abs(static_cast<double>(count) * h - span) > 1e-12 * span)
        throw DomainError("integrate_fixed: h must divide the interval");
    const bool implicit = scheme == Scheme::BDF || scheme == Scheme::AdamsMoulton;
    if (scheme == Scheme::ExplicitEuler && order != 1) throw DomainError("integrate_fixed: explicit Euler has order 1");
    if (scheme == Scheme::RK4 && order != 4) throw DomainError("integrate_fixed: RK4 has order 4");
    if (scheme == Scheme::BDF && (order < 1 || order > 7)) throw DomainError("integrate_fixed: BDF order must be 1..7");
    if (scheme == Scheme::AdamsMoulton && (order < 1 || order > 6))
        throw DomainError("integrate_fixed: Adams-Moulton order must be 1..6");
    if (start == StartMode::Exact && !problem.exact)
        throw DomainError("integrate_fixed: exact start needs an exact solution");

    auto grid = [&](std::size_t i) { return i == count ? problem.x_end : problem.x0 + static_cast<double>(i) * h; };

    IntegrationTrace trace;
    trace.record(problem.x0, problem.y0, 0.0, 0, 0);

    if (!implicit) {
        Vector y = problem.y0;
        for (std::size_t i = 0; i < count; ++i) {
            y = scheme == Scheme::RK4 ? step_rk4(problem, grid(i), y, h) : step_explicit_euler(problem, grid(i), y, h);
            trace.record(grid(i + 1), y, h, order, 0);
        }
        return trace;
    }

    std::vector<LinearMultistepMethod> methods;
    for (int p = 1; p <= order; ++p) methods.push_back(implicit_method(scheme, p));

    // Newest first.
    std::vector<double> hx{problem.x0};
    std::vector<Vector> hy{problem.y0};
    std::vector<Vector> hf{evaluate_rhs(problem, problem.x0, problem.y0)};
    const std::size_t keep = methods.back().steps() + 1;

    for (std::size_t i = 0; i < count; ++i) {
        const double x_next = grid(i + 1);
        int p = std::min<int>(static_cast<int>(i) + 1, order);
        Vector y_next;
        int iters = 0;
        if (start == StartMode::Exact && i + 1 < methods.back().steps()) {
            y_next = problem.exact(x_next);
            p = 0;
        } else {
            if (start == StartMode::Exact) p = order;
            try {
                auto res = step_lmm_implicit(methods[static_cast<std::size_t>(p - 1)], problem, hx, hy, hf, h, config);
                y_next = std::move(res.y);
                iters = res.iters;
            } catch (const NewtonFailure&) {
                trace.status = TraceStatus::NewtonFailure;
                return trace;
            }
        }
        hx.insert(hx.begin(), x_next);
        hf.insert(hf.begin(), evaluate_rhs(problem, x_next, y_next));
        hy.insert(hy.begin(), y_next);
        if (hx.size() > keep) {
            hx.pop_back();
            hy.pop_back();
            hf.pop_back();
        }
        trace.record(x_next, std::move(y_next), h, p, iters);
    }
    return trace;
}

namespace detail {

/// Re-samples newest-first history from spacing h_old onto spacing h_new using
/// the interpolant through the first `degree + 1` points.
inline std::vector<Vector> rescale_history(const std::vector<Vector>& hist, std::size_t degree, double ratio) {
    const std::size_t m = std::min(hist.size(), degree + 1);
    std::vector<Vector> out(m, Vector(hist.front().size(), 0.0));
    for (std::size_t t = 0; t < m; ++t) {
        const double at = -static_cast<double>(t) * ratio;  // in units of h_old
        for (std::size_t j = 0; j < m; ++j) {
            double w = 1.0;
            for (std::size_t l = 0; l < m; ++l)
                if (l != j) w *= (at + static_cast<double>(l)) / (static_cast<double>(l) - static_cast<double>(j));
            for (std::size_t c = 0; c < out[t].size(); ++c) out[t][c] += w * hist[j][c];
        }
    }
    return out;
}

inline Vector backward_difference(const std::vector<Vector>& hist, std::size_t order) {
    Vector d(hist.front().size(), 0.0);
    double binom = 1.0;
    for (std::size_t k = 0; k <= order; ++k) {
        const double w = (k % 2 == 0 ? 1.0 : -1.0) * binom;
        for (std::size_t c = 0; c < d.size(); ++c) d[c] += w * hist[k][c];
        binom = binom * static_cast<double>(order - k) / static_cast<double>(k + 1);
    }
    return d;
}

}  // namespace detail

/// Variable order (1..max_order), variable step BDF integration.
inline IntegrationTrace integrate_adaptive(const OdeProblem& problem, const SolverConfig& config) {
    problem.validate();
    config.validate();

    const double span = problem.x_end - problem.x0;
    const double h_max = std::min(config.h_max, span);
    const int max_order = config.max_order;

    std::vector<LinearMultistepMethod> methods;
    std::vector<double> err_const;  // |C_{p+1}| for p = 1..max_order+1
    for (int p = 1; p <= max_order + 1; ++p) {
        methods.push_back(bdf_coefficients(p));
        err_const.push_back(std::abs(error_constant(methods.back()).to_double()));
    }
    auto cst = [&](int p) { return err_const[static_cast<std::size_t>(p - 1)]; };

    IntegrationTrace trace;
    trace.record(problem.x0, problem.y0, 0.0, 0, 0);

    auto wrms = [&](const Vector& e, const Vector& ya, const Vector& yb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double w = config.atol + config.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            acc += (e[i] / w) * (e[i] / w);
        }
        return std::sqrt(acc / static_cast<double>(e.size()));
    };

    double x = problem.x0;
    double h = std::min(std::max(config.h_init, config.h_min), h_max);
    int q = 1;
    std::vector<Vector> hist{problem.y0};  // newest first, spacing h
    std::optional<Vector> prev_e;          // corrector minus predictor of the previous step
    int steps_at_q = 0;
    int err_fails = 0;
    int newton_fails = 0;

    auto change_step = [&](double h_new) {
        const double ratio = h_new / h;
        if (ratio == 1.0) return;
        // Degree q + 1 keeps enough points for the predictor after an order raise.
        if (hist.size() > 1) hist = detail::rescale_history(hist, static_cast<std::size_t>(q) + 1, ratio);
        if (prev_e)
            for (auto& v : *prev_e) v *= std::pow(ratio, q + 1);
        h = h_new;
    };

    while (x < problem.x_end) {
        const double remaining = problem.x_end - x;
        const bool last = h >= remaining * (1.0 - 1e-12);
        if (last) change_step(remaining);

        Vector pred;
        if (hist.size() >= static_cast<std::size_t>(q) + 1) {
            pred = detail::extrapolate(std::span<const Vector>(hist).first(static_cast<std::size_t>(q) + 1));
        } else {
            pred = detail::axpy(hist.front(), h, evaluate_rhs(problem, x, hist.front()));
        }

        std::vector<double> hx;
        for (std::size_t i = 0; i < static_cast<std::size_t>(q); ++i) hx.push_back(x - static_cast<double>(i) * h);
        ImplicitStepResult res;
        try {
            res = step_lmm_implicit(methods[static_cast<std::size_t>(q - 1)], problem, hx,
                                    std::span<const Vector>(hist).first(static_cast<std::size_t>(q)), {}, h, config,
                                    pred);
        } catch (const NewtonFailure&) {
            ++newton_fails;
            ++trace.rejected_steps;
        } catch (const SingularMatrixError&) {
            ++newton_fails;
            ++trace.rejected_steps;
        } catch (const EvaluationError&) {
            ++newton_fails;
            ++trace.rejected_steps;
        }
        if (res.y.empty()) {
            if (h <= config.h_min * (1.0 + 1e-12)) {
                if (newton_fails >= 3) {
                    trace.status = TraceStatus::NewtonFailure;
                    return trace;
                }
                continue;
            }
            change_step(std::max(0.25 * h, config.h_min));
            continue;
        }
        newton_fails = 0;

        Vector e(res.y.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = res.y[i] - pred[i];
        const double c_q = cst(q);
        const double err = c_q / (1.0 + c_q) * wrms(e, hist.front(), res.y);

        if (err > 1.0) {
            ++trace.rejected_steps;
            ++err_fails;
            double factor = std::max(0.1, 0.9 * std::pow(err, -1.0 / (q + 1)));
            if (err_fails >= 3) {
                factor = 0.1;
                if (q > 1) {
                    hist.resize(std::min<std::size_t>(hist.size(), static_cast<std::size_t>(q)));
                    q = 1;
                    prev_e.reset();
                    steps_at_q = 0;
                }
            }
            const double h_new = h * factor;
            if (h_new < config.h_min) {
                trace.status = TraceStatus::StepSizeUnderflow;
                return trace;
            }
            change_step(h_new);
            continue;
        }

        // Accept.
        err_fails = 0;
        x = last ? problem.x_end : x + h;
        hist.insert(hist.begin(), res.y);
        if (hist.size() > static_cast<std::size_t>(max_order) + 2) hist.pop_back();
        trace.record(x, res.y, h, q, res.iters);
        ++steps_at_q;
        if (last) break;

        // Choose the next order and step by the largest permitted step.
        auto permitted = [](double est, int p) {
            return est <= 0.0 ? 2.0 : 0.9 * std::pow(est, -1.0 / (p + 1));
        };
        int best_q = q;
        double best_r = permitted(err, q);
        if (steps_at_q >= q + 1) {
            if (q > 1 && hist.size() >= static_cast<std::size_t>(q) + 1) {
                const double est = cst(q - 1) * wrms(detail::backward_difference(hist, static_cast<std::size_t>(q)),
                                                      hist[1], hist[0]);
                const double r = permitted(est, q - 1);
                if (r > best_r) {
                    best_r = r;
                    best_q = q - 1;
                }
            }
            if (q < max_order && prev_e && hist.size() >= static_cast<std::size_t>(q) + 2) {
                Vector d(e.size());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = (e[i] - (*prev_e)[i]) / (1.0 + c_q);
                const double est = cst(q + 1) * wrms(d, hist[1], hist[0]);
                const double r = permitted(est, q + 1);
                if (r > best_r) {
                    best_r = r;
                    best_q = q + 1;
                }
            }
        }
        prev_e = e;

        double ratio = std::clamp(best_r, 0.1, 2.0);
        if (best_q == q && ratio >= 1.0 && ratio < 1.2) ratio = 1.0;
        ratio = std::clamp(h * ratio, config.h_min, h_max) / h;
        if (best_q != q) {
            q = best_q;
            steps_at_q = 0;
            prev_e.reset();
        }
        change_step(h * ratio);
    }
    trace.status = TraceStatus::Completed;
    return trace;
}

/// Y' = A Y split into independent modes z_i' = lambda_i z_i with Y = T Z.
struct DecoupledSystem {
    std::vector<Complex> lambdas;
    std::vector<Complex> z0;  // T^{-1} y0
    ComplexMatrix transform;  // columns are eigenvectors
    double x0 = 0.0;
    double x_end = 1.0;
    /// One problem per mode: dimension 1 for a real mode, 2 (real, imaginary parts) otherwise.
    std::vector<OdeProblem> problems;

    /// Y = T Z for per-mode states laid out as in `problems`.
    [[nodiscard]] Vector recompose(const std::vector<Vector>& mode_states) const {
        const std::size_t n = lambdas.size();
        std::vector<Complex> z(n);
        for (std::size_t i = 0; i < n; ++i)
            z[i] = mode_states[i].size() == 1 ? Complex(mode_states[i][0], 0.0)
                                              : Complex(mode_states[i][0], mode_states[i][1]);
        const auto y = transform * std::span<const Complex>(z);
        Vector out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = y[i].real();
        return out;
    }

    /// Closed-form Y(x) = T diag(exp(lambda_i (x - x0))) Z0.
    [[nodiscard]] Vector exact(double x) const {
        std::vector<Vector> states;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const Complex zi = z0[i] * std::exp(lambdas[i] * (x - x0));
            if (problems[i].dimension == 1) states.push_back({zi.real()});
            else states.push_back({zi.real(), zi.imag()});
        }
        return recompose(states);
    }
};

namespace detail {

inline OdeProblem scalar_mode_problem(Complex lambda, Complex z0, double x0, double x_end) {
    OdeProblem p;
    p.x0 = x0;
    p.x_end = x_end;
    if (lambda.imag() == 0.0 && z0.imag() == 0.0) {
        const double l = lambda.real();
        p.dimension = 1;
        p.y0 = {z0.real()};
        p.rhs = [l](double, const Vector& y) { return Vector{l * y[0]}; };
        p.jacobian = [l](double, const Vector&) { return Matrix{{l}}; };
        p.exact = [l, z = z0.real(), x0](double x) { return Vector{z * std::exp(l * (x - x0))}; };
    } else {
        const double a = lambda.real();
        const double b = lambda.imag();
        p.dimension = 2;
        p.y0 = {z0.real(), z0.imag()};
        p.rhs = [a, b](double, const Vector& y) { return Vector{a * y[0] - b * y[1], b * y[0] + a * y[1]}; };
        p.jacobian = [a, b](double, const Vector&) { return Matrix{{a, -b}, {b, a}}; };
        p.exact = [lambda, z0, x0](double x) {
            const Complex z = z0 * std::exp(lambda * (x - x0));
            return Vector{z.real(), z.imag()};
        };
    }
    return p;
}

}  // namespace detail

/// Decouples Y' = A Y (A diagonalizable with distinct eigenvalues) into scalar modes.
inline DecoupledSystem decouple_linear_system(const Matrix& a, const Vector& y0, double x0, double x_end) {
    if (!a.square() || a.rows() != y0.size()) throw DomainError("decouple_linear_system: shape mismatch");
    auto eig = eigendecompose(a);
    const std::size_t n = a.rows();

    std::vector<Complex> yc(y0.begin(), y0.end());
    const auto z0 = lu_solve<Complex>(eig.vectors, std::span<const Complex>(yc));

    DecoupledSystem d;
    d.lambdas = eig.values;
    d.transform = std::move(eig.vectors);
    d.x0 = x0;
    d.x_end = x_end;
    d.z0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex zi = z0[i];
        // Real eigenpairs give a real mode; drop roundoff in the imaginary part.
        if (d.lambdas[i].imag() == 0.0 && std::abs(zi.imag()) <= 1e-12 * (1.0 + std::abs(zi))) zi = {zi.real(), 0.0};
        d.z0[i] = zi;
        d.problems.push_back(detail::scalar_mode_problem(d.lambdas[i], zi, x0, x_end));
    }
    return d;
}

/// Y' = A Y with exact solution from decoupling when A is diagonalizable.
inline OdeProblem linear_system_problem(const Matrix& a, const Vector& y0, double x0 = 0.0, double x_end = 1.0) {
    if (!a.square() || a.rows() != y0.size() || a.rows() == 0)
        throw DomainError("linear_system: A must be square and match y0");
    OdeProblem p;
    p.dimension = a.rows();
    p.x0 = x0;
    p.x_end = x_end;
    p.y0 = y0;
    p.rhs = [a](double, const Vector& y) { return a * std::span<const double>(y); };
    p.jacobian = [a](double, const Vector&) { return a; };
    try {
        auto d = std::make_shared<DecoupledSystem>(decouple_linear_system(a, y0, x0, x_end));
        p.exact = [d](double x) { return d->exact(x); };
    } catch (const ClusteredEigenvaluesError&) {
        // Defective or clustered: no closed form attached.
    }
    return p;
}

/// Named parameters for problem_library.
struct ProblemParams {
    std::map<std::string, double> values;
    std::optional<Matrix> matrix;
    std::optional<Vector> y0;

    [[nodiscard]] double get(const std::string& key, double fallback) const {
        const auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }
};

/// Built-in problems: "dahlquist" (lambda or lambda_re/lambda_im), "linear_system" (matrix), "van_der_pol" (mu).
/// Common keys: x0, x_end, and y0 (scalar value for dahlquist).
inline OdeProblem problem_library(const std::string& name, const ProblemParams& params) {
    const double x0 = params.get("x0", 0.0);
    for (const auto& [key, value] : params.values)
        if (!std::isfinite(value)) throw DomainError("problem_library: parameter '" + key + "' is not finite");

    if (name == "dahlquist") {
        const double x_end = params.get("x_end", 1.0);
        if (params.values.count("lambda") && (params.values.count("lambda_re") || params.values.count("lambda_im")))
            throw DomainError("problem_library: give either lambda or lambda_re/lambda_im");
        const double re = params.values.count("lambda") ? params.get("lambda", -1.0) : params.get("lambda_re", -1.0);
        const double im = params.get("lambda_im", 0.0);
        double y0 = params.get("y0", 1.0);
        if (params.y0) {
            if (params.y0->size() != 1) throw DomainError("problem_library: dahlquist takes a scalar y0");
            y0 = params.y0->front();
        }
        if (!(x_end > x0)) throw DomainError("problem_library: x_end must exceed x0");
        return detail::scalar_mode_problem(Complex(re, im), Complex(y0, 0.0), x0, x_end);
    }
    if (name == "linear_system") {
        if (!params.matrix) throw DomainError("problem_library: linear_system needs a matrix");
        const Vector y0 = params.y0 ? *params.y0 : Vector(params.matrix->rows(), 1.0);
        return linear_system_problem(*params.matrix, y0, x0, params.get("x_end", 1.0));
    }
    if (name == "van_der_pol") {
        const double mu = params.get("mu", 1.0);
        OdeProblem p;
        p.dimension = 2;
        p.x0 = x0;
        p.x_end = params.get("x_end", 10.0);
        p.y0 = params.y0 ? *params.y0 : Vector{2.0, 0.0};
        if (p.y0.size() != 2) throw DomainError("problem_library: van_der_pol needs a 2-vector y0");
        p.rhs = [mu](double, const Vector& y) { return Vector{y[1], mu * (1.0 - y[0] * y[0]) * y[1] - y[0]}; };
        p.jacobian = [mu](double, const Vector& y) {
            return Matrix{{0.0, 1.0}, {-2.0 * mu * y[0] * y[1] - 1.0, mu * (1.0 - y[0] * y[0])}};
        };
        p.validate();
        return p;
    }
    throw DomainError("problem_library: unknown problem '" + name + "'");
}

}  // namespace gearstab
