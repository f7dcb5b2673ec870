#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "volterra/basis.hpp"
#include "volterra/errors.hpp"
#include "volterra/quadrature.hpp"

namespace volterra {

/**
 * A real signal on [0, T].
 *
 * `breakpoints` lists the times where the signal may have kinks (the sample
 * times of an interpolated measurement); empty for smooth closed forms.
 * `oscillation_hint` is the dominant angular frequency used for paneling.
 */
struct Signal {
    std::function<double(double)> eval;
    double oscillation_hint = 0.0;
    std::vector<double> breakpoints;

    double operator()(double t) const { return eval(t); }
    [[nodiscard]] bool smooth() const noexcept { return breakpoints.empty(); }
};

/// An input/output pair (x, y) on [0, horizon].
struct SignalPair {
    Signal x;
    Signal y;
    double horizon = 1.0;
    std::string label;
};

struct GroundTruthKernels {
    std::function<double(double)> k1;
    std::function<double(double, double)> k2;
};

struct NoiseSpec {
    double delta = 0.0;
    int trials = 1;
    std::uint64_t seed = 0;
};

/// Piecewise-linear interpolant through (times[i], values[i]); times strictly increasing.
class SampledSignal {
public:
    SampledSignal(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values)) {
        if (times_.size() != values_.size()) throw ConfigError("SampledSignal: length mismatch");
        if (times_.size() < 2) throw ConfigError("SampledSignal: need at least two samples");
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (!(times_[i] > times_[i - 1])) throw ConfigError("SampledSignal: times must increase");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw ConfigError("SampledSignal: non-finite sample");
        }
    }

    double operator()(double t) const {
        const double span = times_.back() - times_.front();
        const double slack = kDomainTolerance * std::max(1.0, span);
        if (t < times_.front() - slack || t > times_.back() + slack) {
            throw DomainError("SampledSignal: t = " + std::to_string(t) + " outside sample range");
        }
        if (t <= times_.front()) return values_.front();
        if (t >= times_.back()) return values_.back();
        const auto hi = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
        return values_[lo] + w * (values_[hi] - values_[lo]);
    }

    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    [[nodiscard]] Signal as_signal(double oscillation_hint = 0.0) const {
        auto self = std::make_shared<const SampledSignal>(*this);
        return Signal{[self](double t) { return (*self)(t); }, oscillation_hint, times_};
    }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

/// `count` equally spaced points on [0, T], endpoints included.
inline std::vector<double> uniform_points(std::size_t count, double horizon) {
    if (count < 2) throw ConfigError("uniform_points: count must be >= 2");
    std::vector<double> t(count);
    for (std::size_t k = 0; k < count; ++k) {
        t[k] = horizon * static_cast<double>(k) / static_cast<double>(count - 1);
    }
    t.back() = horizon;
    return t;
}

// ---------------------------------------------------------------------------
// Model 1: periodic input.

inline constexpr double kModel1Frequency = 20.0;
/// y(0) of the closed form as printed; the corrected response subtracts this times cos(20t)e^{-t}.
inline constexpr double kModel1PrintedOffset = 100.0 / 40501.0;

inline double model1_input(double t) { return std::sin(20.0 * t); }

inline double model1_output_printed(double t) {
    const double c = std::cos(20.0 * t);
    const double s = std::sin(20.0 * t);
    const double first = (199.0 * c * c - 15.0 * std::sin(40.0 * t) - 200.0 * c * std::exp(-2.0 * t) + 1.0 +
                          10.0 * s * std::exp(-2.0 * t) + 20.0 * s * std::exp(-t)) /
                         81002.0;
    const double second = (3.0 * s - 20.0 * c + 850920.0 / 40501.0 * std::exp(-3.0 * t)) / 409.0;
    return first + second;
}

/// Exact response to sin(20t) of K1(s) = e^{-3s}, K2(s1,s2) = e^{-s1-2s2}.
inline double model1_output_corrected(double t) {
    return model1_output_printed(t) - kModel1PrintedOffset * std::cos(20.0 * t) * std::exp(-t);
}

inline GroundTruthKernels model1_kernels() {
    return {[](double s) { return std::exp(-3.0 * s); },
            [](double s1, double s2) { return std::exp(-s1 - 2.0 * s2); }};
}

// ---------------------------------------------------------------------------
// Model 2: fading input, output defined by known kernels.

inline constexpr double kModel2Frequency = 10.0;

inline double model2_input(double t) { return std::exp(-3.0 * t) * std::sin(10.0 * t); }

inline GroundTruthKernels model2_kernels() {
    return {[](double s) { return std::cos(0.5 * s); },
            [](double s1, double s2) { return std::sin(s1 + 2.0 * s2); }};
}

/**
 * y(t) = int_0^t K1(s) x(t-s) ds + int_0^t int_0^t K2(s1,s2) x(t-s1) x(t-s2) ds1 ds2.
 *
 * The second-order term uses the tensor rule directly, so K2 need not be
 * separable. Throws NumericalError if either integral misses abs_tol.
 */
inline double forward_response(const GroundTruthKernels& kernels, const std::function<double(double)>& x, double t,
                               const QuadratureConfig& cfg) {
    if (!(t >= 0.0)) throw DomainError("forward_response: t must be >= 0");
    if (t == 0.0) return 0.0;
    const auto first =
        integrate_1d([&](double s) { return kernels.k1(s) * x(t - s); }, 0.0, t, cfg);
    const auto second = integrate_2d_tensor(
        [&](double s1, double s2) { return kernels.k2(s1, s2) * x(t - s1) * x(t - s2); }, t, cfg);
    if (!first.converged || !second.converged) {
        throw NumericalError("forward_response: quadrature did not reach abs_tol at t = " + std::to_string(t));
    }
    return first.value + second.value;
}

namespace detail {

inline std::uint64_t bits_of(double v) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof b);
    return b;
}

/// Memoized forward response; safe to call from several threads.
class ResponseCache {
public:
    ResponseCache(GroundTruthKernels kernels, std::function<double(double)> x, QuadratureConfig cfg)
        : kernels_(std::move(kernels)), x_(std::move(x)), cfg_(cfg) {}

    double operator()(double t) {
        const std::uint64_t key = bits_of(t);
        {
            std::lock_guard lock(mutex_);
            if (auto it = values_.find(key); it != values_.end()) return it->second;
        }
        const double v = forward_response(kernels_, x_, t, cfg_);
        std::lock_guard lock(mutex_);
        values_.emplace(key, v);
        return v;
    }

private:
    GroundTruthKernels kernels_;
    std::function<double(double)> x_;
    QuadratureConfig cfg_;
    std::mutex mutex_;
    std::unordered_map<std::uint64_t, double> values_;
};

inline std::string config_key(const QuadratureConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << c.points_per_panel << '/' << c.min_panels_per_unit << '/' << c.refine_factor << '/' << c.abs_tol << '/'
       << c.max_refinements;
    return os.str();
}

}  // namespace detail

enum class Model1Variant { Printed, Corrected };

inline SignalPair make_model1_pair(Model1Variant variant = Model1Variant::Corrected) {
    SignalPair p;
    p.x = Signal{model1_input, kModel1Frequency, {}};
    p.y = Signal{variant == Model1Variant::Printed ? model1_output_printed : model1_output_corrected,
                 kModel1Frequency, {}};
    p.horizon = 1.0;
    p.label = variant == Model1Variant::Printed ? "model1-printed" : "model1-corrected";
    return p;
}

/// Model 2 pair; y comes from the forward response, cached per quadrature configuration.
inline SignalPair make_model2_pair(QuadratureConfig cfg = {}) {
    cfg = with_oscillation_hint(cfg, kModel2Frequency);
    static std::mutex registry_mutex;
    static std::map<std::string, std::shared_ptr<detail::ResponseCache>> registry;
    std::shared_ptr<detail::ResponseCache> cache;
    {
        std::lock_guard lock(registry_mutex);
        auto& slot = registry[detail::config_key(cfg)];
        if (!slot) slot = std::make_shared<detail::ResponseCache>(model2_kernels(), model2_input, cfg);
        cache = slot;
    }
    SignalPair p;
    p.x = Signal{model2_input, kModel2Frequency, {}};
    p.y = Signal{[cache](double t) { return (*cache)(t); }, kModel2Frequency, {}};
    p.horizon = 1.0;
    p.label = "model2";
    return p;
}

// ---------------------------------------------------------------------------
// Noise.

/// Stream ids used by the stability experiment so x and y noise are independent.
inline constexpr std::uint64_t kInputNoiseStream = 0;
inline constexpr std::uint64_t kOutputNoiseStream = 1;

/// Number of uniform samples of x used to model a measured (noisy) input.
inline constexpr std::size_t kMeasuredInputSamples = 2048;

/**
 * Adds i.i.d. uniform noise on [-delta, delta] to every sample.
 *
 * The generator is seeded from (seed, trial, stream) only, so the result is
 * reproducible across runs and platforms.
 */
inline std::vector<double> perturb(std::vector<double> samples, const NoiseSpec& spec, int trial,
                                   std::uint64_t stream = kInputNoiseStream) {
    if (trial < 0 || trial >= spec.trials) {
        throw ConfigError("perturb: trial " + std::to_string(trial) + " outside [0, " +
                          std::to_string(spec.trials) + ")");
    }
    if (!(spec.delta >= 0.0)) throw ConfigError("perturb: delta must be >= 0");
    if (spec.delta == 0.0) return samples;
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(stream)};
    std::mt19937_64 rng(seq);
    for (double& v : samples) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        v += spec.delta * (2.0 * u - 1.0);
    }
    return samples;
}

/**
 * Noisy copy of `clean` for one stability trial.
 *
 * x is sampled on kMeasuredInputSamples uniform points, perturbed and
 * linearly interpolated; y is sampled at `output_times` (the working grid)
 * and perturbed there.
 */
inline SignalPair noisy_pair(const SignalPair& clean, const std::vector<double>& output_times, const NoiseSpec& spec,
                             int trial) {
    const auto grid = uniform_points(kMeasuredInputSamples, clean.horizon);
    std::vector<double> xs(grid.size());
    std::transform(grid.begin(), grid.end(), xs.begin(), [&](double t) { return clean.x(t); });
    std::vector<double> ys(output_times.size());
    std::transform(output_times.begin(), output_times.end(), ys.begin(), [&](double t) { return clean.y(t); });

    SignalPair p;
    p.x = SampledSignal(grid, perturb(std::move(xs), spec, trial, kInputNoiseStream)).as_signal(clean.x.oscillation_hint);
    if (output_times.size() >= 2) {
        p.y = SampledSignal(output_times, perturb(std::move(ys), spec, trial, kOutputNoiseStream)).as_signal();
    } else {
        const double v = perturb(std::move(ys), spec, trial, kOutputNoiseStream).front();
        p.y = Signal{[v](double) { return v; }, 0.0, {}};
    }
    p.horizon = clean.horizon;
    p.label = clean.label + "+noise";
    return p;
}

// ---------------------------------------------------------------------------
// CSV import: two columns (t, value) with a mandatory header row. Lines
// starting with '#' are comments.

inline SampledSignal read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<double> t;
    std::vector<double> v;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected two columns");
        }
        try {
            std::size_t used = 0;
            const std::string a = line.substr(0, comma);
            const std::string b = line.substr(comma + 1);
            t.push_back(std::stod(a, &used));
            v.push_back(std::stod(b, &used));
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    if (!header_seen) throw ConfigError(path + ": missing header row");
    return SampledSignal(std::move(t), std::move(v));
}

/// Pair from user-supplied samples; both files must share the same time column starting at 0.
inline SignalPair make_sampled_pair(const SampledSignal& x, const SampledSignal& y, double oscillation_hint = 0.0) {
    if (x.times() != y.times()) {
        throw ConfigError("input_csv and output_csv must have identical time columns");
    }
    if (std::abs(x.times().front()) > kDomainTolerance) {
        throw ConfigError("input_csv: first sample time must be 0");
    }
    SignalPair p;
    p.x = x.as_signal(oscillation_hint);
    p.y = y.as_signal(oscillation_hint);
    p.horizon = x.times().back();
    p.label = "user-csv";
    return p;
}

}  // namespace volterra
