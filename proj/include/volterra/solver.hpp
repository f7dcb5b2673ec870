#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <future>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "volterra/assembly.hpp"
#include "volterra/basis.hpp"
#include "volterra/errors.hpp"
#include "volterra/quadrature.hpp"
#include "volterra/signals.hpp"

namespace volterra {

inline constexpr double kDefaultRcond = 1e-12;
inline constexpr std::size_t kDefaultEvalPoints = 1001;

/// Identified kernels: K1(s) = sum a_i B_i(s), K2(s1,s2) = sum c_ij B_i(s1) B_j(s2).
struct KernelExpansion {
    BasisSet basis;
    Sizes sizes;
    Eigen::VectorXd a;
    Eigen::MatrixXd c;

    KernelExpansion(BasisSet b, Sizes s)
        : basis(b),
          sizes(s),
          a(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.m))),
          c(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.m1), static_cast<Eigen::Index>(s.m2))) {}

    /// Unpack a solution vector laid out as in column_layout().
    static KernelExpansion from_coefficients(BasisSet b, Sizes s, const Eigen::VectorXd& coef) {
        if (static_cast<std::size_t>(coef.size()) != s.unknowns()) {
            throw ConfigError("KernelExpansion: coefficient vector has wrong length");
        }
        KernelExpansion e(b, s);
        Eigen::Index col = 0;
        for (Eigen::Index i = 0; i < e.a.size(); ++i) e.a[i] = coef[col++];
        for (Eigen::Index i = 0; i < e.c.rows(); ++i) {
            for (Eigen::Index j = 0; j < e.c.cols(); ++j) e.c(i, j) = coef[col++];
        }
        return e;
    }

    [[nodiscard]] Eigen::VectorXd coefficients() const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(sizes.unknowns()));
        Eigen::Index col = 0;
        for (Eigen::Index i = 0; i < a.size(); ++i) v[col++] = a[i];
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            for (Eigen::Index j = 0; j < c.cols(); ++j) v[col++] = c(i, j);
        }
        return v;
    }

    /// (c + c^T)/2 on the common square block; entries outside it are kept as is.
    [[nodiscard]] Eigen::MatrixXd symmetrized_c() const {
        Eigen::MatrixXd s = c;
        const Eigen::Index n = std::min(c.rows(), c.cols());
        s.topLeftCorner(n, n) = 0.5 * (c.topLeftCorner(n, n) + c.topLeftCorner(n, n).transpose());
        return s;
    }

    [[nodiscard]] double k1(double s) const {
        double v = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) v += a[i] * mapped_eval(basis, static_cast<std::size_t>(i), s);
        return v;
    }

    [[nodiscard]] double k2(double s1, double s2) const {
        const auto b1 = basis_row(basis, s1);
        const auto b2 = basis_row(basis, s2);
        double v = 0.0;
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            for (Eigen::Index j = 0; j < c.cols(); ++j) v += c(i, j) * b1[i] * b2[j];
        }
        return v;
    }
};

enum class Method { Collocation, LeastSquares };

inline const char* to_string(Method m) { return m == Method::Collocation ? "collocation" : "lsm"; }
inline const char* to_string(GridScheme s) {
    return s == GridScheme::UniformIncludingZero ? "uniform_including_zero" : "uniform_excluding_zero";
}

struct MinNormSolution {
    Eigen::VectorXd coefficients;
    std::size_t numerical_rank = 0;
};

/**
 * Minimum-norm least-squares solution of matrix * c = rhs.
 *
 * Singular values at or below rcond * sigma_max are discarded, which is what
 * makes the rank-deficient collocation systems (zero row at t = 0, identical
 * C_ij / C_ji columns) solvable.
 */
inline MinNormSolution solve_min_norm(const RowMatrix& matrix, const Eigen::VectorXd& rhs,
                                      double rcond = kDefaultRcond) {
    if (matrix.rows() == 0 || matrix.cols() == 0) throw ConfigError("solve_min_norm: empty matrix");
    if (matrix.rows() != rhs.size()) throw ConfigError("solve_min_norm: rhs length mismatch");
    if (!(rcond > 0.0 && rcond < 1.0)) throw ConfigError("solve_min_norm: rcond must be in (0, 1)");
    if (!matrix.allFinite() || !rhs.allFinite()) throw NumericalError("solve_min_norm: non-finite input");

    const Eigen::MatrixXd dense = matrix;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rcond);
    MinNormSolution out;
    out.numerical_rank = static_cast<std::size_t>(svd.rank());
    if (out.numerical_rank == 0) {
        out.coefficients = Eigen::VectorXd::Zero(matrix.cols());
    } else {
        out.coefficients = svd.solve(rhs);
    }
    if (!out.coefficients.allFinite()) throw NumericalError("solve_min_norm: non-finite solution");
    return out;
}

inline MinNormSolution solve_min_norm(const AssembledSystem& sys, double rcond = kDefaultRcond) {
    return solve_min_norm(sys.matrix, sys.rhs, rcond);
}

/// Model output sum a_i beta_i(t) + sum c_ij beta_i(t) beta_j(t) for input x.
inline double predict(const KernelExpansion& e, const Signal& x, double t, const QuadratureConfig& cfg) {
    const auto b = beta_row(e.basis, x, t, cfg);
    double v = 0.0;
    for (Eigen::Index i = 0; i < e.a.size(); ++i) v += e.a[i] * b[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < e.c.rows(); ++i) {
        double inner = 0.0;
        for (Eigen::Index j = 0; j < e.c.cols(); ++j) inner += e.c(i, j) * b[static_cast<std::size_t>(j)];
        v += b[static_cast<std::size_t>(i)] * inner;
    }
    return v;
}

struct ResidualPoint {
    double t;
    double residual;  // y(t) - prediction
};

inline std::vector<ResidualPoint> residual_curve(const KernelExpansion& e, const SignalPair& pair,
                                                 std::size_t eval_points, const QuadratureConfig& cfg) {
    if (eval_points < 2) throw ConfigError("eval_points must be >= 2");
    std::vector<ResidualPoint> out;
    out.reserve(eval_points);
    for (double t : uniform_points(eval_points, pair.horizon)) {
        out.push_back({t, pair.y(t) - predict(e, pair.x, t, cfg)});
    }
    return out;
}

/// Max |y(t) - prediction(t)| over eval_points uniform points of [0, T].
inline double residual_max(const KernelExpansion& e, const SignalPair& pair,
                           std::size_t eval_points = kDefaultEvalPoints, const QuadratureConfig& cfg = {}) {
    double worst = 0.0;
    for (const auto& p : residual_curve(e, pair, eval_points, cfg)) worst = std::max(worst, std::abs(p.residual));
    return worst;
}

struct IdentifyOptions {
    GridScheme scheme = GridScheme::UniformIncludingZero;
    double rcond = kDefaultRcond;
    std::size_t eval_points = kDefaultEvalPoints;
    QuadratureConfig quadrature{};
};

struct IdentificationReport {
    IdentificationReport(KernelExpansion e, Method m) : expansion(std::move(e)), method(m) {}

    KernelExpansion expansion;
    Method method = Method::Collocation;
    double residual_max = 0.0;
    double node_residual_max = 0.0;
    std::size_t numerical_rank = 0;
    double truncation_threshold = kDefaultRcond;
    NodeGrid grid;
    std::string config_digest;
};

/// Number of nodes for a method: m + m1*m2 for collocation, `lsm_nodes` for least squares.
inline std::size_t node_count_for(Method method, const Sizes& sizes, std::size_t lsm_nodes) {
    if (method == Method::Collocation) return sizes.unknowns();
    if (lsm_nodes + 1 <= sizes.unknowns()) {
        throw ConfigError("least squares needs more than m + m1*m2 - 1 = " + std::to_string(sizes.unknowns() - 1) +
                          " nodes, got " + std::to_string(lsm_nodes));
    }
    return lsm_nodes;
}

/**
 * Fits on `fit_pair` over `grid` and measures the dense residual against
 * `eval_pair`. The two differ only in noise studies (noisy fit, clean check).
 */
inline IdentificationReport identify_on_grid(const SignalPair& fit_pair, const SignalPair& eval_pair,
                                             const Sizes& sizes, Method method, const NodeGrid& grid,
                                             const IdentifyOptions& opts) {
    const auto sys = assemble(sizes, grid, fit_pair, opts.quadrature);
    const auto sol = solve_min_norm(sys, opts.rcond);
    const BasisSet basis(sizes.basis_count(), fit_pair.horizon);

    IdentificationReport r{KernelExpansion::from_coefficients(basis, sizes, sol.coefficients), method};
    r.numerical_rank = sol.numerical_rank;
    r.truncation_threshold = opts.rcond;
    r.grid = grid;
    r.node_residual_max = (sys.rhs - sys.matrix * sol.coefficients).cwiseAbs().maxCoeff();
    r.residual_max = residual_max(r.expansion, eval_pair, opts.eval_points, opts.quadrature);
    return r;
}

/// Square collocation: m + m1*m2 uniform nodes, t_k = kT/N with N = m + m1*m2 - 1 by default.
inline IdentificationReport identify_collocation(const SignalPair& pair, const Sizes& sizes,
                                                 const IdentifyOptions& opts = {}) {
    sizes.validate();
    const auto grid = make_grid(opts.scheme, node_count_for(Method::Collocation, sizes, 0), pair.horizon);
    return identify_on_grid(pair, pair, sizes, Method::Collocation, grid, opts);
}

/// Overdetermined least squares on `node_count` uniform nodes.
inline IdentificationReport identify_lsm(const SignalPair& pair, const Sizes& sizes, std::size_t node_count,
                                         const IdentifyOptions& opts = {}) {
    sizes.validate();
    const auto grid =
        make_grid(opts.scheme, node_count_for(Method::LeastSquares, sizes, node_count), pair.horizon);
    return identify_on_grid(pair, pair, sizes, Method::LeastSquares, grid, opts);
}

struct StabilitySetup {
    SignalPair clean;
    Sizes sizes;
    Method method = Method::Collocation;
    std::size_t lsm_nodes = 0;
    IdentifyOptions options{};
};

struct StabilityResult {
    double mean_residual = 0.0;
    std::vector<double> trial_residuals;
};

/**
 * Mean dense residual over noisy trials.
 *
 * Each trial fits on a perturbed copy of the pair and is scored against the
 * clean output with the clean input. delta = 0 skips the perturbation.
 * Trials run concurrently; the mean is accumulated in trial order.
 */
inline StabilityResult stability_experiment(const StabilitySetup& setup, const NoiseSpec& noise) {
    if (noise.trials < 1) throw ConfigError("noise.trials must be >= 1");
    if (!(noise.delta >= 0.0)) throw ConfigError("noise.delta must be >= 0");
    setup.sizes.validate();
    const auto grid = make_grid(setup.options.scheme,
                                node_count_for(setup.method, setup.sizes, setup.lsm_nodes), setup.clean.horizon);

    auto run_trial = [&](int trial) {
        if (noise.delta == 0.0) {
            return identify_on_grid(setup.clean, setup.clean, setup.sizes, setup.method, grid, setup.options)
                .residual_max;
        }
        const auto noisy = noisy_pair(setup.clean, grid.nodes, noise, trial);
        return identify_on_grid(noisy, setup.clean, setup.sizes, setup.method, grid, setup.options).residual_max;
    };

    std::vector<std::future<double>> pending;
    pending.reserve(static_cast<std::size_t>(noise.trials));
    for (int trial = 0; trial < noise.trials; ++trial) {
        pending.push_back(std::async(std::launch::async, run_trial, trial));
    }
    StabilityResult out;
    for (auto& f : pending) out.trial_residuals.push_back(f.get());
    double sum = 0.0;
    for (double r : out.trial_residuals) sum += r;
    out.mean_residual = sum / static_cast<double>(out.trial_residuals.size());
    return out;
}

}  // namespace volterra
