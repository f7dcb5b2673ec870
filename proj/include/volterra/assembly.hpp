#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volterra/basis.hpp"
#include "volterra/errors.hpp"
#include "volterra/quadrature.hpp"
#include "volterra/signals.hpp"

namespace volterra {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Expansion sizes: m first-order terms and an m1 x m2 second-order block.
struct Sizes {
    std::size_t m = 1;
    std::size_t m1 = 1;
    std::size_t m2 = 1;

    [[nodiscard]] std::size_t unknowns() const noexcept { return m + m1 * m2; }
    [[nodiscard]] std::size_t basis_count() const noexcept { return std::max({m, m1, m2}); }

    void validate() const {
        if (m < 1 || m1 < 1 || m2 < 1) throw ConfigError("sizes m, m1, m2 must all be >= 1");
    }

    static Sizes square(std::size_t m) { return {m, m, m}; }
};

enum class GridScheme { UniformIncludingZero, UniformExcludingZero };

struct NodeGrid {
    std::vector<double> nodes;
    GridScheme scheme = GridScheme::UniformIncludingZero;
};

/**
 * `count` uniform nodes on [0, T].
 *
 * IncludingZero: t_k = kT/(count-1), k = 0..count-1.
 * ExcludingZero: t_k = (k+1)T/count, k = 0..count-1.
 */
inline NodeGrid make_grid(GridScheme scheme, std::size_t count, double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("make_grid: horizon must be > 0");
    NodeGrid g;
    g.scheme = scheme;
    if (scheme == GridScheme::UniformIncludingZero) {
        if (count < 2) throw ConfigError("make_grid: a grid including zero needs at least 2 nodes");
        g.nodes = uniform_points(count, horizon);
    } else {
        if (count < 1) throw ConfigError("make_grid: node count must be >= 1");
        g.nodes.resize(count);
        for (std::size_t k = 0; k < count; ++k) {
            g.nodes[k] = horizon * static_cast<double>(k + 1) / static_cast<double>(count);
        }
        g.nodes.back() = horizon;
    }
    return g;
}

/// Identity of one unknown: A_i (first order) or C_ij (second order).
struct ColumnId {
    enum class Kind { Linear, Quadratic } kind = Kind::Linear;
    std::size_t i = 0;
    std::size_t j = 0;

    [[nodiscard]] std::string name() const {
        return kind == Kind::Linear ? "A" + std::to_string(i)
                                    : "C" + std::to_string(i) + "_" + std::to_string(j);
    }
};

/// Columns in storage order: A_0..A_{m-1}, then C_ij row-major (i outer, j inner).
inline std::vector<ColumnId> column_layout(const Sizes& sizes) {
    std::vector<ColumnId> cols;
    cols.reserve(sizes.unknowns());
    for (std::size_t i = 0; i < sizes.m; ++i) cols.push_back({ColumnId::Kind::Linear, i, 0});
    for (std::size_t i = 0; i < sizes.m1; ++i) {
        for (std::size_t j = 0; j < sizes.m2; ++j) cols.push_back({ColumnId::Kind::Quadratic, i, j});
    }
    return cols;
}

struct AssembledSystem {
    RowMatrix matrix;
    Eigen::VectorXd rhs;
    std::vector<ColumnId> columns;
    NodeGrid grid;
    Sizes sizes;
    /// Number of distinct one-dimensional integrals evaluated.
    std::size_t integral_count = 0;
};

namespace detail {

inline QuadratureConfig beta_config(const QuadratureConfig& cfg, const Signal& x) {
    return with_oscillation_hint(cfg, x.oscillation_hint);
}

/// Kinks of s -> x(t - s) on (0, t).
inline std::vector<double> convolution_breakpoints(const Signal& x, double t) {
    std::vector<double> out;
    out.reserve(x.breakpoints.size());
    for (double g : x.breakpoints) {
        if (g > 0.0 && g < t) out.push_back(t - g);
    }
    return out;
}

inline QuadratureResult beta_integral(const BasisSet& basis, const Signal& x, std::size_t i, double t,
                                      const QuadratureConfig& cfg, const std::vector<double>& kinks) {
    const auto integrand = [&](double s) { return mapped_eval(basis, i, s) * x(t - s); };
    if (x.smooth()) return integrate_1d(integrand, 0.0, t, cfg);
    // Sampled inputs are linear between kinks, so each piece is a polynomial of
    // degree <= basis.count() and a short rule is already exact.
    QuadratureConfig piece = cfg;
    piece.points_per_panel = std::min(cfg.points_per_panel, static_cast<int>(basis.count() / 2 + 2));
    return integrate_piecewise(integrand, 0.0, t, kinks, piece);
}

}  // namespace detail

/// beta_i(t) = int_0^t B_i(s) x(t - s) ds.
inline QuadratureResult beta_coeff(const BasisSet& basis, const Signal& x, std::size_t i, double t,
                                   const QuadratureConfig& cfg) {
    if (i >= basis.count()) throw DomainError("beta_coeff: index out of range");
    basis.check_domain(t);
    if (t <= 0.0) return {};
    const auto kinks = detail::convolution_breakpoints(x, t);
    return detail::beta_integral(basis, x, i, t, detail::beta_config(cfg, x), kinks);
}

/**
 * beta_0(t)..beta_{count-1}(t) for one time.
 *
 * Throws NumericalError naming the index if an integral misses abs_tol.
 */
inline std::vector<double> beta_row(const BasisSet& basis, const Signal& x, double t, const QuadratureConfig& cfg) {
    basis.check_domain(t);
    std::vector<double> out(basis.count(), 0.0);
    if (t <= 0.0) return out;
    const auto local = detail::beta_config(cfg, x);
    const auto kinks = detail::convolution_breakpoints(x, t);
    for (std::size_t i = 0; i < basis.count(); ++i) {
        const auto r = detail::beta_integral(basis, x, i, t, local, kinks);
        if (!r.converged) {
            throw NumericalError("beta integral i = " + std::to_string(i) + " at t = " + std::to_string(t) +
                                 " did not converge (error estimate " + std::to_string(r.error_estimate) + ")");
        }
        out[i] = r.value;
    }
    return out;
}

/// gamma_ij(t) = beta_i(t) * beta_j(t): the double integral factorizes.
inline double gamma_coeff(double beta_i, double beta_j) noexcept { return beta_i * beta_j; }

/**
 * Design matrix and right-hand side for the second-order model on `grid`.
 *
 * Row k holds beta_i(t_k) in the A_i columns and beta_i(t_k) beta_j(t_k) in
 * the C_ij columns; rhs[k] = y(t_k). Each beta is integrated once per node.
 */
inline AssembledSystem assemble(const Sizes& sizes, const NodeGrid& grid, const SignalPair& pair,
                                const QuadratureConfig& cfg) {
    sizes.validate();
    validate(cfg);
    if (grid.nodes.empty()) throw ConfigError("assemble: empty grid");
    const BasisSet basis(sizes.basis_count(), pair.horizon);

    AssembledSystem sys;
    sys.sizes = sizes;
    sys.grid = grid;
    sys.columns = column_layout(sizes);
    sys.matrix = RowMatrix::Zero(static_cast<Eigen::Index>(grid.nodes.size()),
                                 static_cast<Eigen::Index>(sizes.unknowns()));
    sys.rhs.resize(static_cast<Eigen::Index>(grid.nodes.size()));

    const auto local = detail::beta_config(cfg, pair.x);
    for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
        const double t = grid.nodes[k];
        basis.check_domain(t);
        const auto row = static_cast<Eigen::Index>(k);
        sys.rhs[row] = pair.y(t);
        if (t <= 0.0) continue;

        const auto kinks = detail::convolution_breakpoints(pair.x, t);
        std::vector<double> beta(basis.count());
        for (std::size_t i = 0; i < basis.count(); ++i) {
            const auto r = detail::beta_integral(basis, pair.x, i, t, local, kinks);
            ++sys.integral_count;
            if (!r.converged) {
                throw AssemblyError("assemble: beta integral (i = " + std::to_string(i) + ", k = " +
                                    std::to_string(k) + ") did not reach abs_tol; error estimate " +
                                    std::to_string(r.error_estimate));
            }
            beta[i] = r.value;
        }

        Eigen::Index col = 0;
        for (std::size_t i = 0; i < sizes.m; ++i) sys.matrix(row, col++) = beta[i];
        for (std::size_t i = 0; i < sizes.m1; ++i) {
            for (std::size_t j = 0; j < sizes.m2; ++j) sys.matrix(row, col++) = gamma_coeff(beta[i], beta[j]);
        }
    }
    return sys;
}

}  // namespace volterra
