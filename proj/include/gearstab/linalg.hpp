#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gearstab/errors.hpp"

namespace gearstab {

using Complex = std::complex<double>;

namespace detail {
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
}  // namespace detail

/// Row-major dense matrix.
template <class T>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_) throw DomainError("DenseMatrix: entry count does not match shape");
        for (const auto& v : data_)
            if (!detail::finite(v)) throw DomainError("DenseMatrix: non-finite entry");
    }
    DenseMatrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DomainError("DenseMatrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool square() const { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<const T> entries() const { return data_; }

    /// Maximum absolute row sum.
    [[nodiscard]] double norm_inf() const {
        double best = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) row += std::abs((*this)(i, j));
            best = std::max(best, row);
        }
        return best;
    }

    [[nodiscard]] std::vector<T> operator*(std::span<const T> x) const {
        std::vector<T> y(rows_, T{});
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
        DenseMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = DenseMatrix<double>;
using ComplexMatrix = DenseMatrix<Complex>;

inline constexpr std::size_t kMaxLuDimension = 256;
inline constexpr std::size_t kMaxEigenDimension = 32;

/// LU factorization with partial pivoting, PA = LU stored in place.
template <class T>
class LuFactorization {
public:
    /// With `perturb_tiny_pivots` set, pivots below the threshold are replaced
    /// by the threshold instead of raising (used by inverse iteration).
    explicit LuFactorization(DenseMatrix<T> a, bool perturb_tiny_pivots = false) : lu_(std::move(a)) {
        if (!lu_.square()) throw DomainError("lu: matrix must be square");
        const std::size_t n = lu_.rows();
        if (n > kMaxLuDimension) throw DomainError("lu: dimension exceeds " + std::to_string(kMaxLuDimension));
        const double norm = lu_.norm_inf();
        const double threshold = 1e-13 * (norm > 0.0 ? norm : 1.0);
        perm_.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    p = i;
                }
            if (best < threshold) {
                if (!perturb_tiny_pivots)
                    throw SingularMatrixError("lu: pivot " + std::to_string(best) + " below threshold in column " +
                                              std::to_string(k));
                lu_(p, k) = T{threshold};
            }
            if (p != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(perm_[k], perm_[p]);
            }
            const T pivot = lu_(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const T factor = lu_(i, k) / pivot;
                lu_(i, k) = factor;
                if (factor == T{}) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= factor * lu_(k, j);
            }
        }
    }

    [[nodiscard]] std::vector<T> solve(std::span<const T> b) const {
        const std::size_t n = lu_.rows();
        if (b.size() != n) throw DomainError("lu: right-hand side length mismatch");
        std::vector<T> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            T acc = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
            x[i] = acc;
        }
        for (std::size_t i = n; i-- > 0;) {
            T acc = x[i];
            for (std::size_t j = i + 1; j < n; ++j) acc -= lu_(i, j) * x[j];
            x[i] = acc / lu_(i, i);
        }
        return x;
    }

private:
    DenseMatrix<T> lu_;
    std::vector<std::size_t> perm_;
};

/// Solves A x = b by LU with partial pivoting.
template <class T>
std::vector<T> lu_solve(const DenseMatrix<T>& a, std::span<const T> b) {
    return LuFactorization<T>(a).solve(b);
}

inline std::vector<double> lu_solve(const Matrix& a, const std::vector<double>& b) {
    return lu_solve<double>(a, std::span<const double>(b));
}

/// Polynomial with complex coefficients in ascending degree. Trailing
/// coefficients with magnitude below 1e-14 are trimmed on construction.
class ComplexPolynomial {
public:
    ComplexPolynomial() : coeffs_{Complex{0.0}} {}
    explicit ComplexPolynomial(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
        for (const auto& c : coeffs_)
            if (!detail::finite(c)) throw DomainError("ComplexPolynomial: non-finite coefficient");
        while (coeffs_.size() > 1 && std::abs(coeffs_.back()) < 1e-14) coeffs_.pop_back();
        if (coeffs_.empty()) coeffs_.push_back(Complex{0.0});
    }
    ComplexPolynomial(std::initializer_list<Complex> coeffs) : ComplexPolynomial(std::vector<Complex>(coeffs)) {}

    /// Monic polynomial with the given roots.
    static ComplexPolynomial from_roots(std::span<const Complex> roots) {
        std::vector<Complex> c{Complex{1.0}};
        for (const auto& r : roots) {
            std::vector<Complex> next(c.size() + 1, Complex{0.0});
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i + 1] += c[i];
                next[i] -= r * c[i];
            }
            c = std::move(next);
        }
        return ComplexPolynomial(std::move(c));
    }

    [[nodiscard]] std::size_t degree() const { return coeffs_.size() - 1; }
    [[nodiscard]] const std::vector<Complex>& coefficients() const { return coeffs_; }
    [[nodiscard]] const Complex& leading() const { return coeffs_.back(); }

    [[nodiscard]] Complex operator()(Complex z) const {
        Complex acc{0.0};
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * z + coeffs_[i];
        return acc;
    }

    /// p(z) and p'(z) by Horner.
    [[nodiscard]] std::pair<Complex, Complex> value_and_derivative(Complex z) const {
        Complex p{0.0};
        Complex dp{0.0};
        for (std::size_t i = coeffs_.size(); i-- > 0;) {
            dp = dp * z + p;
            p = p * z + coeffs_[i];
        }
        return {p, dp};
    }

    /// sum |a_i| |z|^i, the scale for a backward-error residual.
    [[nodiscard]] double magnitude_at(double r) const {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * r + std::abs(coeffs_[i]);
        return acc;
    }

private:
    std::vector<Complex> coeffs_;
};

inline constexpr int kMaxAberthIterations = 500;

/// All roots of p (with multiplicity) by Aberth-Ehrlich simultaneous iteration.
inline std::vector<Complex> polynomial_roots(const ComplexPolynomial& p) {
    const std::size_t n = p.degree();
    if (n < 1) throw DomainError("polynomial_roots: degree must be at least 1");
    if (n > 16) throw DomainError("polynomial_roots: degree must be at most 16");

    const auto& a = p.coefficients();
    if (n == 1) return {-a[0] / a[1]};

    double cauchy = 0.0;
    for (std::size_t i = 0; i < n; ++i) cauchy = std::max(cauchy, std::abs(a[i] / a[n]));
    cauchy += 1.0;

    // Fixed angular offset keeps guesses off the real axis symmetry.
    std::vector<Complex> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n) + 0.4;
        z[k] = std::polar(cauchy, angle);
    }

    auto residual = [&](const Complex& x) { return std::abs(p(x)) / p.magnitude_at(std::abs(x)); };

    std::vector<bool> done(n, false);
    for (int iter = 0; iter < kMaxAberthIterations; ++iter) {
        bool all_done = true;
        for (std::size_t k = 0; k < n; ++k) {
            if (done[k]) continue;
            const auto [pv, dpv] = p.value_and_derivative(z[k]);
            if (pv == Complex{0.0}) {
                done[k] = true;
                continue;
            }
            const Complex ratio = pv / dpv;
            Complex sum{0.0};
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) sum += 1.0 / (z[k] - z[j]);
            Complex step = ratio / (1.0 - ratio * sum);
            if (!detail::finite(step)) step = ratio;
            if (detail::finite(step)) z[k] -= step;
            if (residual(z[k]) < 1e-12) done[k] = true;
            else all_done = false;
        }
        if (all_done) {
            // One polishing sweep of plain Newton on the converged set.
            for (auto& root : z) {
                const auto [pv, dpv] = p.value_and_derivative(root);
                if (std::abs(dpv) > 0.0) {
                    const Complex cand = root - pv / dpv;
                    if (detail::finite(cand) && residual(cand) <= residual(root)) root = cand;
                }
            }
            return z;
        }
    }
    throw ConvergenceError("polynomial_roots: no convergence after 500 iterations", z);
}

namespace detail {

// Parlett-Reinsch balancing by powers of two (similarity transform).
inline void balance(Matrix& a) {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Reduction to upper Hessenberg form by stabilized elementary similarity transforms.
inline void to_hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t m = 1; m + 1 < n; ++m) {
        double x = 0.0;
        std::size_t piv = m;
        for (std::size_t j = m; j < n; ++j)
            if (std::abs(a(j, m - 1)) > std::abs(x)) {
                x = a(j, m - 1);
                piv = j;
            }
        if (piv != m) {
            for (std::size_t j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
            for (std::size_t j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
        }
        if (x == 0.0) continue;
        for (std::size_t i = m + 1; i < n; ++i) {
            double y = a(i, m - 1);
            if (y == 0.0) continue;
            y /= x;
            a(i, m - 1) = y;
            for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
            for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
        }
    }
    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = 0.0;
}

inline double sign_of(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Francis double-shift QR on an upper Hessenberg matrix; returns eigenvalues.
inline std::vector<Complex> hessenberg_qr(Matrix a) {
    const int n = static_cast<int>(a.rows());
    std::vector<Complex> eig(static_cast<std::size_t>(n));
    auto at = [&a](int i, int j) -> double& { return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(at(i, j));

    const int max_total = 100 * n;
    int total = 0;
    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 1; --l) {
                double s = std::abs(at(l - 1, l - 1)) + std::abs(at(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(at(l, l - 1)) + s == s) {
                    at(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = at(nn, nn);
            if (l == nn) {
                eig[static_cast<std::size_t>(nn)] = Complex(x + t, 0.0);
                --nn;
            } else {
                double y = at(nn - 1, nn - 1);
                double w = at(nn, nn - 1) * at(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        const double hi = x + z;
                        const double lo = z != 0.0 ? x - w / z : hi;
                        eig[static_cast<std::size_t>(nn - 1)] = Complex(hi, 0.0);
                        eig[static_cast<std::size_t>(nn)] = Complex(lo, 0.0);
                    } else {
                        eig[static_cast<std::size_t>(nn - 1)] = Complex(x + p, z);
                        eig[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if (total >= max_total) {
                        throw ConvergenceError("eigenvalues: QR iteration did not converge",
                                               std::vector<Complex>(eig.begin(), eig.end()));
                    }
                    if (its == 10 || its == 20) {
                        // Exceptional shift.
                        t += x;
                        for (int i = 0; i <= nn; ++i) at(i, i) -= x;
                        const double s = std::abs(at(nn, nn - 1)) + std::abs(at(nn - 1, nn - 2));
                        x = y = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    ++total;
                    int m = nn - 2;
                    double p = 0.0;
                    double q = 0.0;
                    double r = 0.0;
                    double z = 0.0;
                    for (; m >= l; --m) {
                        z = at(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / at(m + 1, m) + at(m, m + 1);
                        q = at(m + 1, m + 1) - z - r - s;
                        r = at(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(at(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(at(m - 1, m - 1)) + std::abs(z) +
                                                        std::abs(at(m + 1, m + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        at(i, i - 2) = 0.0;
                        if (i != m + 2) at(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = at(k, k - 1);
                            q = at(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = at(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) at(k, k - 1) = -at(k, k - 1);
                        } else {
                            at(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = at(k, j) + q * at(k + 1, j);
                            if (k != nn - 1) {
                                p += r * at(k + 2, j);
                                at(k + 2, j) -= p * z;
                            }
                            at(k + 1, j) -= p * y;
                            at(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * at(i, k) + y * at(i, k + 1);
                            if (k != nn - 1) {
                                p += z * at(i, k + 2);
                                at(i, k + 2) -= p * r;
                            }
                            at(i, k + 1) -= p * q;
                            at(i, k) -= p;
                        }
                    }
                }
            }
        } while (nn >= 0 && l < nn - 1);
    }
    return eig;
}

}  // namespace detail

/// All eigenvalues of a real square matrix, with multiplicity: balance,
/// Hessenberg reduction, then shifted QR with deflation.
inline std::vector<Complex> eigenvalues(const Matrix& a) {
    if (!a.square()) throw DomainError("eigenvalues: matrix must be square");
    if (a.rows() > kMaxEigenDimension)
        throw DomainError("eigenvalues: dimension exceeds " + std::to_string(kMaxEigenDimension));
    if (a.rows() == 0) return {};
    Matrix work = a;
    detail::balance(work);
    detail::to_hessenberg(work);
    return detail::hessenberg_qr(std::move(work));
}

struct EigenDecomposition {
    ComplexMatrix vectors;  // column i is the unit eigenvector for values[i]
    std::vector<Complex> values;
};

/// Eigenvalues plus unit eigenvectors by inverse iteration. Requires
/// pairwise-separated eigenvalues; defective or clustered spectra throw.
inline EigenDecomposition eigendecompose(const Matrix& a) {
    const std::vector<Complex> values = eigenvalues(a);
    const std::size_t n = a.rows();
    const double norm = std::max(a.norm_inf(), std::numeric_limits<double>::min());

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(values[i] - values[j]) <= 1e-8 * norm)
                throw ClusteredEigenvaluesError("eigendecompose: eigenvalues " + std::to_string(i) + " and " +
                                                std::to_string(j) + " are not separated (defective or clustered)");

    ComplexMatrix ac(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ac(i, j) = a(i, j);

    EigenDecomposition out{ComplexMatrix(n, n), values};
    for (std::size_t col = 0; col < n; ++col) {
        const Complex shift = values[col] + Complex(1e-10 * norm, 0.0);
        ComplexMatrix b = ac;
        for (std::size_t i = 0; i < n; ++i) b(i, i) -= shift;
        const LuFactorization<Complex> lu(std::move(b), true);

        std::vector<Complex> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = Complex(1.0 + 0.1 * static_cast<double>(i), 0.0);
        double res = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 20 && (it < 2 || res > 1e-12 * norm); ++it) {
            v = lu.solve(v);
            double len = 0.0;
            for (const auto& c : v) len += std::norm(c);
            len = std::sqrt(len);
            if (!(len > 0.0) || !std::isfinite(len)) throw SingularMatrixError("eigendecompose: inverse iteration broke down");
            for (auto& c : v) c /= len;
            const auto av = ac * std::span<const Complex>(v);
            res = 0.0;
            for (std::size_t i = 0; i < n; ++i) res += std::norm(av[i] - values[col] * v[i]);
            res = std::sqrt(res);
        }
        // Fix the phase so the largest component is real and positive.
        std::size_t big = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[big])) big = i;
        const Complex phase = std::abs(v[big]) / v[big];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, col) = v[i] * phase;
    }
    return out;
}

}  // namespace gearstab
