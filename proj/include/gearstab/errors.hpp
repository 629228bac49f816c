#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gearstab {

// Argument outside the documented domain (bad order, unknown problem name, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative method ran out of iterations. Carries the best iterate found.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<std::complex<double>> best)
        : std::runtime_error(what), best_iterate(std::move(best)) {}
    std::vector<std::complex<double>> best_iterate;
};

// Eigenvalues too close together for the eigenvector decoupling (covers defective matrices).
class ClusteredEigenvaluesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// s(e^{i theta}) vanished while sampling a boundary locus.
class DegenerateDenominatorError : public std::runtime_error {
public:
    DegenerateDenominatorError(const std::string& what, double theta_at)
        : std::runtime_error(what), theta(theta_at) {}
    double theta;
};

// Leading coefficient of the characteristic polynomial vanished.
class DegreeCollapseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Spectrum does not satisfy Re(lambda) < 0.
class NotAsymptoticallyStableError : public std::domain_error {
public:
    NotAsymptoticallyStableError(const std::string& what, std::complex<double> offending)
        : std::domain_error(what), eigenvalue(offending) {}
    std::complex<double> eigenvalue;
};

// Right-hand side produced NaN or infinity.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NewtonFailure : public std::runtime_error {
public:
    NewtonFailure(const std::string& what, std::vector<double> last, int iterations)
        : std::runtime_error(what), last_iterate(std::move(last)), iters(iterations) {}
    std::vector<double> last_iterate;
    int iters;
};

}  // namespace gearstab
