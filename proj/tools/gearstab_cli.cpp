// gearstab: stability regions of BDF / Adams-Moulton methods and a small stiff ODE driver.
//
// Exit codes: 0 success, 2 I/O, 3 solver failure, 4 domain precondition,
// 64 usage, 65 input parse error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gearstab/gearstab.hpp"

namespace {

using namespace gearstab;

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitSolver = 3;
constexpr int kExitDomain = 4;
constexpr int kExitUsage = 64;
constexpr int kExitParse = 65;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Writes to the named file, or to stdout for "-".
void emit(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing '" + path + "'");
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("matrix file is empty");
    std::istringstream head(line);
    long long n = 0;
    std::string extra;
    if (!(head >> n) || (head >> extra) || n <= 0 || n > static_cast<long long>(kMaxEigenDimension))
        throw ParseError("first line must be a dimension n in 1.." + std::to_string(kMaxEigenDimension));
    std::vector<double> entries;
    for (long long r = 0; r < n; ++r) {
        if (!std::getline(in, line)) throw ParseError("expected " + std::to_string(n) + " matrix rows");
        std::istringstream row(line);
        std::string tok;
        long long count = 0;
        while (row >> tok) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw ParseError("row " + std::to_string(r + 1) + ": '" + tok + "' is not a number");
            }
            if (used != tok.size() || !std::isfinite(v))
                throw ParseError("row " + std::to_string(r + 1) + ": '" + tok + "' is not a finite number");
            entries.push_back(v);
            ++count;
        }
        if (count != n) throw ParseError("row " + std::to_string(r + 1) + " must have " + std::to_string(n) + " entries");
    }
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("trailing content after matrix rows");
    const auto dim = static_cast<std::size_t>(n);
    return Matrix(dim, dim, std::move(entries));
}

LinearMultistepMethod method_for(const std::string& family, int order) {
    if (family == "bdf") {
        if (order < 1 || order > 7) throw UsageError("BDF order must be in 1..7");
        return bdf_coefficients(order);
    }
    if (order < 1 || order > 6) throw UsageError("Adams-Moulton order must be in 1..6");
    return adams_moulton_coefficients(order - 1);
}

// ---- region ---------------------------------------------------------------

struct RegionArgs {
    std::string family = "bdf";
    int order = 1;
    std::size_t samples = 1024;
    std::string format = "csv";
    std::string out = "-";
    bool no_shade = false;
};

int run_region(const RegionArgs& a) {
    const auto m = method_for(a.family, a.order);
    if (a.samples < 4) throw UsageError("--samples must be at least 4");
    StabilityLocus locus;
    if (a.samples >= 16) {
        locus = boundary_locus(m, a.samples);
    } else {
        // Coarse grids are evaluated point by point.
        locus.method = m;
        locus.method_order = m.order;
        locus.closed = true;
        for (std::size_t k = 0; k <= a.samples; ++k) {
            const double theta = k == a.samples ? 2.0 * std::numbers::pi
                                                : 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(a.samples);
            locus.samples.push_back({theta, boundary_point(m, theta)});
        }
    }

    if (a.format == "csv") {
        std::string csv = "theta,re,im\n";
        for (const auto& s : locus.samples) csv += g12(s.theta) + "," + g12(s.sigma.real()) + "," + g12(s.sigma.imag()) + "\n";
        emit(a.out, csv);
    } else {
        PlotSpec spec = fit_plot_spec(locus);
        spec.shade_exterior = !a.no_shade;
        spec.title = m.name() + " boundary locus";
        if (m.family == MethodFamily::BDF && m.order >= 3 && m.order <= 6) spec.dashed_vertical_at = stiff_stability_abscissa(m);
        emit(a.out, render_locus_svg(locus, spec));
    }

    // Companion report on stderr.
    if (m.family == MethodFamily::BDF) {
        const auto dense = a.samples >= 1024 ? locus : boundary_locus(m, 8192);
        const auto crossings = find_self_intersections(dense);
        if (m.order <= 6) std::cerr << m.name() << ": delta=" << g6(stiff_stability_abscissa(m)) << "\n";
        std::cerr << m.name() << ": self_intersections=" << crossings.size() << "\n";
        for (const auto& p : crossings) std::cerr << "  intersection re=" << g6(p.real()) << " im=" << g6(p.imag()) << "\n";
    }
    return kExitOk;
}

// ---- delta ----------------------------------------------------------------

int run_delta(int order) {
    if (order == 7) {
        std::cerr << "delta: BDF7 is not stiffly stable (its boundary locus intersects itself); no abscissa exists\n";
        return kExitUsage;
    }
    if (order < 1 || order > 6) throw UsageError("--order must be in 1..6");
    const double d = stiff_stability_abscissa(bdf_coefficients(order));
    std::cout << "order,delta\n" << order << "," << g6(d) << "\n";
    return kExitOk;
}

// ---- intersections --------------------------------------------------------

int run_intersections(const std::string& family, int order, std::size_t samples, const std::string& out) {
    if (samples < 1024) throw UsageError("--samples must be at least 1024");
    const auto crossings = find_self_intersections(boundary_locus(method_for(family, order), samples));
    std::string csv = "re,im\n";
    for (const auto& p : crossings) csv += g12(p.real()) + "," + g12(p.imag()) + "\n";
    emit(out, csv);
    return kExitOk;
}

// ---- integrate ------------------------------------------------------------

struct IntegrateArgs {
    std::string problem;
    double lambda = -1.0;
    double lambda_im = 0.0;
    double mu = 1.0;
    std::string matrix;
    std::vector<double> y0;
    double x0 = 0.0;
    double x_end = std::nan("");
    std::string method = "bdf";
    int order = 0;
    bool adaptive = false;
    double h = 0.0;
    double rtol = 1e-6;
    double atol = 0.0;
    double h_init = 1e-4;
    int max_order = 6;
    std::string out = "-";
    CLI::App* sub = nullptr;
};

int run_integrate(const IntegrateArgs& a) {
    ProblemParams params;
    params.values["x0"] = a.x0;
    if (!std::isnan(a.x_end)) params.values["x_end"] = a.x_end;
    if (!a.y0.empty()) params.y0 = a.y0;
    if (a.problem == "dahlquist") {
        params.values["lambda_re"] = a.lambda;
        params.values["lambda_im"] = a.lambda_im;
    } else if (a.problem == "van_der_pol") {
        params.values["mu"] = a.mu;
    } else if (a.problem == "linear_system") {
        if (a.matrix.empty()) throw UsageError("linear_system needs --matrix FILE");
        params.matrix = read_matrix_file(a.matrix);
    }
    OdeProblem problem;
    try {
        problem = problem_library(a.problem, params);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }

    IntegrationTrace trace;
    if (a.adaptive) {
        if (a.method != "bdf") throw UsageError("--adaptive is only available with --method bdf");
        SolverConfig cfg;
        cfg.rtol = a.rtol;
        cfg.atol = a.atol > 0.0 ? a.atol : a.rtol;
        cfg.h_init = a.h_init;
        cfg.h_min = std::min(1e-14 * std::max(1.0, problem.x_end - problem.x0), cfg.h_init);
        cfg.max_order = a.max_order;
        try {
            cfg.validate();
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
        trace = integrate_adaptive(problem, cfg);
    } else {
        if (!(a.h > 0.0)) throw UsageError("fixed-step integration needs --h > 0 (or use --adaptive)");
        Scheme scheme = Scheme::BDF;
        int order = a.order;
        if (a.method == "euler") {
            scheme = Scheme::ExplicitEuler;
            order = order == 0 ? 1 : order;
        } else if (a.method == "rk4") {
            scheme = Scheme::RK4;
            order = order == 0 ? 4 : order;
        } else if (a.method == "am") {
            scheme = Scheme::AdamsMoulton;
            order = order == 0 ? 2 : order;
        } else {
            order = order == 0 ? 2 : order;
        }
        try {
            trace = integrate_fixed(problem, scheme, order, a.h);
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    }

    std::string csv = "x";
    for (std::size_t i = 1; i <= problem.dimension; ++i) csv += ",y" + std::to_string(i);
    csv += ",h,order,newton_iters\n";
    double max_abs = 0.0;
    for (std::size_t k = 0; k < trace.xs.size(); ++k) {
        csv += g12(trace.xs[k]);
        for (const double v : trace.ys[k]) {
            csv += "," + g12(v);
            max_abs = std::max(max_abs, std::abs(v));
        }
        csv += "," + g12(trace.hs[k]) + "," + std::to_string(trace.orders[k]) + "," + std::to_string(trace.newton_iters[k]) + "\n";
    }
    emit(a.out, csv);

    std::cerr << "status=" << to_string(trace.status) << " steps=" << trace.steps() << " rejections=" << trace.rejected_steps
              << "\n";
    std::cerr << "x_end=" << g12(trace.xs.back()) << " y_end=";
    for (std::size_t i = 0; i < trace.ys.back().size(); ++i) std::cerr << (i ? "," : "") << g12(trace.ys.back()[i]);
    std::cerr << "\nmax_abs_y=" << g6(max_abs) << "\n";
    if (problem.exact) {
        const Vector ref = problem.exact(trace.xs.back());
        double err = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - trace.ys.back()[i]));
        std::cerr << "error=" << g6(err) << "\n";
    }
    return trace.status == TraceStatus::Completed ? kExitOk : kExitSolver;
}

// ---- ratio ----------------------------------------------------------------

int run_ratio(const std::string& path) {
    const Matrix a = read_matrix_file(path);
    const auto lambdas = eigenvalues(a);
    for (const auto& l : lambdas) std::cout << g12(l.real()) << "," << g12(l.imag()) << "\n";
    try {
        std::cout << "stiffness_ratio," << g12(stiffness_ratio(lambdas)) << "\n";
    } catch (const NotAsymptoticallyStableError& e) {
        std::cerr << "ratio: spectrum is not asymptotically stable; offending eigenvalue " << g12(e.eigenvalue.real()) << ","
                  << g12(e.eigenvalue.imag()) << "\n";
        return kExitDomain;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gearstab: BDF / Adams-Moulton stability regions and stiff ODE integration"};
    app.require_subcommand(1);

    RegionArgs region;
    auto* region_cmd = app.add_subcommand("region", "Sample the boundary locus as CSV or an SVG plot");
    region_cmd->add_option("--family", region.family, "Method family")->check(CLI::IsMember({"bdf", "am"}));
    region_cmd->add_option("--order", region.order, "Order of accuracy (BDF 1..7, AM 1..6)")->required();
    region_cmd->add_option("--samples", region.samples, "Number of theta intervals");
    region_cmd->add_option("--format", region.format, "Output format")->check(CLI::IsMember({"csv", "svg"}));
    region_cmd->add_option("--out", region.out, "Output path, '-' for stdout");
    region_cmd->add_flag("--no-shade", region.no_shade, "Do not shade the stable exterior in SVG output");

    int delta_order = 0;
    auto* delta_cmd = app.add_subcommand("delta", "Print the stiff-stability abscissa of a BDF method (orders 1..6)");
    delta_cmd->add_option("--order", delta_order, "BDF order")->required();

    std::string ix_family = "bdf";
    int ix_order = 7;
    std::size_t ix_samples = 8192;
    std::string ix_out = "-";
    auto* ix_cmd = app.add_subcommand("intersections", "List self-intersections of a boundary locus as CSV");
    ix_cmd->add_option("--family", ix_family, "Method family")->check(CLI::IsMember({"bdf", "am"}));
    ix_cmd->add_option("--order", ix_order, "Order of accuracy");
    ix_cmd->add_option("--samples", ix_samples, "Number of theta intervals (>= 1024)");
    ix_cmd->add_option("--out", ix_out, "Output path, '-' for stdout");

    IntegrateArgs integ;
    auto* int_cmd = app.add_subcommand("integrate", "Integrate a built-in problem and write the trace as CSV");
    // "-h" would collide with the step-size option.
    int_cmd->set_help_flag("--help", "Print this help message and exit");
    int_cmd->add_option("--problem", integ.problem, "dahlquist | van_der_pol | linear_system")
        ->required()
        ->check(CLI::IsMember({"dahlquist", "van_der_pol", "linear_system"}));
    int_cmd->add_option("--lambda", integ.lambda, "Dahlquist lambda (real part)");
    int_cmd->add_option("--lambda-im", integ.lambda_im, "Dahlquist lambda (imaginary part)");
    int_cmd->add_option("--mu", integ.mu, "Van der Pol parameter");
    int_cmd->add_option("--matrix", integ.matrix, "Matrix file for linear_system (first line n, then n rows)");
    int_cmd->add_option("--y0", integ.y0, "Initial state");
    int_cmd->add_option("--x0", integ.x0, "Start of the interval");
    int_cmd->add_option("--x-end", integ.x_end, "End of the interval");
    int_cmd->add_option("--method", integ.method, "euler | rk4 | bdf | am")
        ->check(CLI::IsMember({"euler", "rk4", "bdf", "am"}));
    int_cmd->add_option("--order", integ.order, "Order for fixed-step bdf/am");
    int_cmd->add_flag("--adaptive", integ.adaptive, "Variable order / step BDF");
    int_cmd->add_option("--h", integ.h, "Fixed step size");
    int_cmd->add_option("--rtol", integ.rtol, "Relative tolerance (adaptive)");
    int_cmd->add_option("--atol", integ.atol, "Absolute tolerance (adaptive, defaults to rtol)");
    int_cmd->add_option("--h-init", integ.h_init, "Initial step (adaptive)");
    int_cmd->add_option("--max-order", integ.max_order, "Highest BDF order (adaptive, 1..6)");
    int_cmd->add_option("--out", integ.out, "Output path, '-' for stdout");

    std::string ratio_file;
    auto* ratio_cmd = app.add_subcommand(
        "ratio", "Eigenvalues and stiffness ratio of a matrix file. Format: first line n, then n rows of n reals");
    ratio_cmd->add_option("matrix", ratio_file, "Matrix file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*region_cmd) return run_region(region);
        if (*delta_cmd) return run_delta(delta_order);
        if (*ix_cmd) return run_intersections(ix_family, ix_order, ix_samples, ix_out);
        if (*int_cmd) return run_integrate(integ);
        if (*ratio_cmd) return run_ratio(ratio_file);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const EvaluationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const NewtonFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}
