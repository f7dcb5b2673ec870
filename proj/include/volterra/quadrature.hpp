#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "volterra/errors.hpp"

namespace volterra {

/// Composite Gauss-Legendre settings shared by every integral in the library.
struct QuadratureConfig {
    int points_per_panel = 16;
    int min_panels_per_unit = 1;
    int refine_factor = 2;
    double abs_tol = 1e-13;
    int max_refinements = 10;
};

/// Panels per unit length so that each panel spans at most half a period of
/// an oscillation with angular frequency `omega`.
inline int panels_for_frequency(double omega) {
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw ConfigError("oscillation hint must be finite and >= 0");
    }
    return std::max(1, static_cast<int>(std::ceil(omega / std::numbers::pi)));
}

inline QuadratureConfig with_oscillation_hint(QuadratureConfig cfg, double omega) {
    cfg.min_panels_per_unit = std::max(cfg.min_panels_per_unit, panels_for_frequency(omega));
    return cfg;
}

inline void validate(const QuadratureConfig& cfg) {
    if (cfg.points_per_panel < 1 || cfg.points_per_panel > 64) {
        throw ConfigError("quadrature.points_per_panel must be in [1, 64]");
    }
    if (cfg.min_panels_per_unit < 1) throw ConfigError("quadrature.min_panels_per_unit must be >= 1");
    if (cfg.refine_factor < 2) throw ConfigError("quadrature.refine_factor must be >= 2");
    if (!(cfg.abs_tol > 0.0)) throw ConfigError("quadrature.abs_tol must be > 0");
    if (cfg.max_refinements < 1) throw ConfigError("quadrature.max_refinements must be >= 1");
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

namespace detail {

inline QuadratureRule build_gauss_legendre(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n from the Chebyshev-like initial guesses; roots are symmetric.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Re-evaluate the derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

inline const std::array<QuadratureRule, 65>& gauss_legendre_table() {
    static const std::array<QuadratureRule, 65> table = [] {
        std::array<QuadratureRule, 65> t{};
        t[1] = QuadratureRule{{0.0}, {2.0}};
        for (int n = 2; n <= 64; ++n) t[n] = build_gauss_legendre(n);
        return t;
    }();
    return table;
}

inline void check_finite(double v, double at) {
    if (!std::isfinite(v)) {
        throw IntegrandError("integrand is not finite at s = " + std::to_string(at));
    }
}

/// One pass of the composite rule on `panels` equal panels of [a, b].
template <typename F>
double composite_1d(const F& f, double a, double b, long panels, const QuadratureRule& rule) {
    const double width = (b - a) / static_cast<double>(panels);
    const double half = 0.5 * width;
    double total = 0.0;
    for (long p = 0; p < panels; ++p) {
        const double left = a + width * static_cast<double>(p);
        const double mid = left + half;
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double s = mid + half * rule.nodes[q];
            const double v = f(s);
            check_finite(v, s);
            acc += rule.weights[q] * v;
        }
        total += half * acc;
    }
    return total;
}

template <typename F>
double composite_2d(const F& f, double t, long panels, const QuadratureRule& rule) {
    // Nodes and weights along one axis, then the tensor product.
    const double width = t / static_cast<double>(panels);
    const double half = 0.5 * width;
    std::vector<double> s;
    std::vector<double> w;
    s.reserve(panels * rule.nodes.size());
    w.reserve(panels * rule.nodes.size());
    for (long p = 0; p < panels; ++p) {
        const double mid = width * static_cast<double>(p) + half;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            s.push_back(mid + half * rule.nodes[q]);
            w.push_back(half * rule.weights[q]);
        }
    }
    double total = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < s.size(); ++b) {
            const double v = f(s[a], s[b]);
            if (!std::isfinite(v)) {
                throw IntegrandError("integrand is not finite at (" + std::to_string(s[a]) + ", " +
                                     std::to_string(s[b]) + ")");
            }
            row += w[b] * v;
        }
        total += w[a] * row;
    }
    return total;
}

inline long initial_panels(const QuadratureConfig& cfg, double length) {
    return std::max(1L, static_cast<long>(std::ceil(cfg.min_panels_per_unit * length - 1e-9)));
}

template <typename Pass>
QuadratureResult refine_until_converged(const QuadratureConfig& cfg, long panels, const Pass& pass) {
    QuadratureResult r;
    double prev = pass(panels);
    for (int level = 1; level <= cfg.max_refinements; ++level) {
        panels *= cfg.refine_factor;
        const double cur = pass(panels);
        r.value = cur;
        r.error_estimate = std::abs(cur - prev);
        if (r.error_estimate <= cfg.abs_tol) {
            r.converged = true;
            return r;
        }
        prev = cur;
    }
    r.converged = false;
    return r;
}

}  // namespace detail

/// Gauss-Legendre nodes (increasing) and weights on [-1, 1]; exact to degree 2n-1.
inline const QuadratureRule& gauss_legendre_rule(int n) {
    if (n < 1 || n > 64) {
        throw ConfigError("gauss_legendre_rule: n = " + std::to_string(n) + " outside [1, 64]");
    }
    return detail::gauss_legendre_table()[static_cast<std::size_t>(n)];
}

/**
 * Composite Gauss-Legendre on uniform panels over [a, b].
 *
 * The panel count starts at ceil(min_panels_per_unit * (b - a)) and is
 * multiplied by refine_factor until two successive values agree to abs_tol.
 * If that never happens within max_refinements the last value is returned
 * with `converged == false`.
 */
template <typename F>
QuadratureResult integrate_1d(const F& f, double a, double b, const QuadratureConfig& cfg) {
    if (!(a <= b)) throw DomainError("integrate_1d: requires a <= b");
    if (a == b) return {};
    const QuadratureRule& rule = gauss_legendre_rule(cfg.points_per_panel);
    return detail::refine_until_converged(cfg, detail::initial_panels(cfg, b - a), [&](long panels) {
        return detail::composite_1d(f, a, b, panels, rule);
    });
}

/// Tensor-product composite rule over the square [0, t]^2.
template <typename F>
QuadratureResult integrate_2d_tensor(const F& f, double t, const QuadratureConfig& cfg) {
    if (!(t >= 0.0)) throw DomainError("integrate_2d_tensor: requires t >= 0");
    if (t == 0.0) return {};
    const QuadratureRule& rule = gauss_legendre_rule(cfg.points_per_panel);
    return detail::refine_until_converged(cfg, detail::initial_panels(cfg, t), [&](long panels) {
        return detail::composite_2d(f, t, panels, rule);
    });
}

/**
 * Integral over [a, b] of an integrand that is smooth between `breakpoints`
 * but may have kinks at them (e.g. a piecewise-linear sampled signal).
 *
 * Each piece gets one panel of the configured rule; the refinement loop then
 * splits every piece uniformly, exactly as in integrate_1d. Breakpoints
 * outside (a, b) are ignored; they need not be sorted.
 */
template <typename F>
QuadratureResult integrate_piecewise(const F& f, double a, double b, std::span<const double> breakpoints,
                                     const QuadratureConfig& cfg) {
    if (!(a <= b)) throw DomainError("integrate_piecewise: requires a <= b");
    if (a == b) return {};
    std::vector<double> edges;
    edges.reserve(breakpoints.size() + 2);
    edges.push_back(a);
    for (double p : breakpoints) {
        if (p > a && p < b) edges.push_back(p);
    }
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    const QuadratureRule& rule = gauss_legendre_rule(cfg.points_per_panel);
    return detail::refine_until_converged(cfg, 1, [&](long split) {
        double total = 0.0;
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            if (edges[e + 1] > edges[e]) {
                total += detail::composite_1d(f, edges[e], edges[e + 1], split, rule);
            }
        }
        return total;
    });
}

}  // namespace volterra
