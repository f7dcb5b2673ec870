#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "volterra/errors.hpp"

namespace volterra {

/// Absolute slack allowed when checking that an argument lies in a closed interval.
inline constexpr double kDomainTolerance = 1e-12;

enum class BasisKind { ChebyshevFirstKind };

/// T_i(u) by the three-term recurrence T_{i+1} = 2u T_i - T_{i-1}.
inline double chebyshev_eval(std::size_t i, double u) {
    if (!(u >= -1.0 - kDomainTolerance && u <= 1.0 + kDomainTolerance)) {
        throw DomainError("chebyshev_eval: u = " + std::to_string(u) + " outside [-1, 1]");
    }
    if (i == 0) return 1.0;
    double prev = 1.0;
    double cur = u;
    for (std::size_t k = 1; k < i; ++k) {
        const double next = 2.0 * u * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/**
 * A family of `count` basis functions B_0..B_{count-1} on [0, T].
 *
 * For the Chebyshev family B_i(t) = T_i(2t/T - 1), so |B_i(t)| <= 1 on the
 * whole interval. Instances are immutable once constructed.
 */
class BasisSet {
public:
    BasisSet(std::size_t count, double horizon, BasisKind kind = BasisKind::ChebyshevFirstKind)
        : kind_(kind), count_(count), horizon_(horizon) {
        if (count == 0) throw ConfigError("BasisSet: count must be >= 1");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw ConfigError("BasisSet: horizon T must be finite and > 0");
        }
    }

    [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }

    void check_domain(double t) const {
        if (!(t >= -kDomainTolerance * horizon_ && t <= horizon_ * (1.0 + kDomainTolerance))) {
            throw DomainError("BasisSet: t = " + std::to_string(t) + " outside [0, " +
                              std::to_string(horizon_) + "]");
        }
    }

    /// Affine pullback of t in [0, T] to u in [-1, 1].
    [[nodiscard]] double to_reference(double t) const {
        check_domain(t);
        return 2.0 * t / horizon_ - 1.0;
    }

private:
    BasisKind kind_;
    std::size_t count_;
    double horizon_;
};

/// B_i(t) for a single index.
inline double mapped_eval(const BasisSet& basis, std::size_t i, double t) {
    if (i >= basis.count()) {
        throw DomainError("mapped_eval: index " + std::to_string(i) + " >= basis count " +
                          std::to_string(basis.count()));
    }
    return chebyshev_eval(i, basis.to_reference(t));
}

/// All of B_0(t)..B_{count-1}(t) in one recurrence pass.
inline void basis_row(const BasisSet& basis, double t, std::vector<double>& out) {
    const double u = basis.to_reference(t);
    out.resize(basis.count());
    out[0] = 1.0;
    if (basis.count() > 1) out[1] = u;
    for (std::size_t k = 2; k < basis.count(); ++k) {
        out[k] = 2.0 * u * out[k - 1] - out[k - 2];
    }
}

inline std::vector<double> basis_row(const BasisSet& basis, double t) {
    std::vector<double> out;
    basis_row(basis, t, out);
    return out;
}

}  // namespace volterra
