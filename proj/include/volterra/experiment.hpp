#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volterra/assembly.hpp"
#include "volterra/io.hpp"
#include "volterra/signals.hpp"
#include "volterra/solver.hpp"

namespace volterra {

enum class ModelKind { Model1Printed, Model1Corrected, Model2, UserCsv };

inline const char* to_string(ModelKind m) {
    switch (m) {
        case ModelKind::Model1Printed: return "model1_printed";
        case ModelKind::Model1Corrected: return "model1_corrected";
        case ModelKind::Model2: return "model2";
        case ModelKind::UserCsv: return "user_csv";
    }
    return "?";
}

inline constexpr std::uint64_t kDefaultSeed = 1;

/// One identification job, usually read from a JSON file.
struct ExperimentConfig {
    ModelKind model = ModelKind::Model2;
    Method method = Method::Collocation;
    Sizes sizes = Sizes::square(3);
    std::optional<std::size_t> lsm_multiplier;
    double horizon = 1.0;
    IdentifyOptions options{};
    std::optional<NoiseSpec> noise;
    std::uint64_t seed = kDefaultSeed;
    std::string input_csv;
    std::string output_csv;
    double oscillation_hint = 0.0;

    /// Least-squares node count k = (m + m1*m2) * multiplier.
    [[nodiscard]] std::size_t lsm_nodes() const { return sizes.unknowns() * lsm_multiplier.value_or(0); }

    /// Fully expanded configuration with defaults filled in; the digest is taken over this.
    [[nodiscard]] nlohmann::json canonical() const {
        nlohmann::json j;
        j["model"] = to_string(model);
        j["method"] = to_string(method);
        j["m"] = sizes.m;
        j["m1"] = sizes.m1;
        j["m2"] = sizes.m2;
        if (lsm_multiplier) j["lsm_multiplier"] = *lsm_multiplier;
        j["T"] = horizon;
        j["grid"] = options.scheme == GridScheme::UniformIncludingZero ? "including_zero" : "excluding_zero";
        j["rcond"] = options.rcond;
        j["eval_points"] = options.eval_points;
        const auto& q = options.quadrature;
        j["quadrature"] = {{"points_per_panel", q.points_per_panel},
                           {"min_panels_per_unit", q.min_panels_per_unit},
                           {"refine_factor", q.refine_factor},
                           {"abs_tol", q.abs_tol},
                           {"max_refinements", q.max_refinements}};
        if (noise) j["noise"] = {{"delta", noise->delta}, {"trials", noise->trials}};
        j["seed"] = seed;
        if (model == ModelKind::UserCsv) {
            j["input_csv"] = input_csv;
            j["output_csv"] = output_csv;
            j["oscillation_hint"] = oscillation_hint;
        }
        return j;
    }

    [[nodiscard]] std::string digest() const { return io::digest(canonical()); }

    [[nodiscard]] NoiseSpec noise_spec() const {
        NoiseSpec n = noise.value_or(NoiseSpec{});
        n.seed = seed;
        return n;
    }
};

namespace detail {

template <typename T>
T field(const nlohmann::json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field '") + name + "' has the wrong type");
    }
}

inline std::size_t positive_size(const nlohmann::json& j, const char* name, std::size_t fallback) {
    if (!j.contains(name)) return fallback;
    const auto& v = j.at(name);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError(std::string("field '") + name + "' must be a positive integer");
    }
    return static_cast<std::size_t>(v.get<long long>());
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown field '" + where + key + "'");
    }
}

}  // namespace detail

/// Parse and validate; every error message names the offending field.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::field;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"model", "method", "m", "m1", "m2", "lsm_multiplier", "T", "grid", "rcond",
                            "eval_points", "quadrature", "noise", "seed", "input_csv", "output_csv",
                            "oscillation_hint"},
                           "");
    ExperimentConfig c;

    const auto model = field<std::string>(j, "model", "model2");
    if (model == "model1_printed") c.model = ModelKind::Model1Printed;
    else if (model == "model1_corrected" || model == "model1") c.model = ModelKind::Model1Corrected;
    else if (model == "model2") c.model = ModelKind::Model2;
    else if (model == "user_csv") c.model = ModelKind::UserCsv;
    else throw ConfigError("field 'model': unknown value '" + model + "'");

    const auto method = field<std::string>(j, "method", "collocation");
    if (method == "collocation") c.method = Method::Collocation;
    else if (method == "lsm") c.method = Method::LeastSquares;
    else throw ConfigError("field 'method': unknown value '" + method + "' (expected collocation or lsm)");

    c.sizes.m = detail::positive_size(j, "m", 3);
    c.sizes.m1 = detail::positive_size(j, "m1", c.sizes.m);
    c.sizes.m2 = detail::positive_size(j, "m2", c.sizes.m);

    if (j.contains("lsm_multiplier")) {
        if (c.method != Method::LeastSquares) {
            throw ConfigError("field 'lsm_multiplier' is only valid with method 'lsm'");
        }
        c.lsm_multiplier = detail::positive_size(j, "lsm_multiplier", 1);
    } else if (c.method == Method::LeastSquares) {
        throw ConfigError("field 'lsm_multiplier' is required with method 'lsm'");
    }
    if (c.method == Method::LeastSquares) node_count_for(c.method, c.sizes, c.lsm_nodes());

    c.horizon = field<double>(j, "T", 1.0);
    if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) throw ConfigError("field 'T' must be finite and > 0");

    const auto grid = field<std::string>(j, "grid", "including_zero");
    if (grid == "including_zero") c.options.scheme = GridScheme::UniformIncludingZero;
    else if (grid == "excluding_zero") c.options.scheme = GridScheme::UniformExcludingZero;
    else throw ConfigError("field 'grid': unknown value '" + grid + "'");

    c.options.rcond = field<double>(j, "rcond", kDefaultRcond);
    if (!(c.options.rcond > 0.0 && c.options.rcond < 1.0)) throw ConfigError("field 'rcond' must be in (0, 1)");
    c.options.eval_points = detail::positive_size(j, "eval_points", kDefaultEvalPoints);
    if (c.options.eval_points < 2) throw ConfigError("field 'eval_points' must be >= 2");

    if (j.contains("quadrature")) {
        const auto& q = j.at("quadrature");
        if (!q.is_object()) throw ConfigError("field 'quadrature' must be an object");
        detail::reject_unknown(q, {"points_per_panel", "min_panels_per_unit", "refine_factor", "abs_tol",
                                   "max_refinements"},
                               "quadrature.");
        auto& cfg = c.options.quadrature;
        cfg.points_per_panel = field<int>(q, "points_per_panel", cfg.points_per_panel);
        cfg.min_panels_per_unit = field<int>(q, "min_panels_per_unit", cfg.min_panels_per_unit);
        cfg.refine_factor = field<int>(q, "refine_factor", cfg.refine_factor);
        cfg.abs_tol = field<double>(q, "abs_tol", cfg.abs_tol);
        cfg.max_refinements = field<int>(q, "max_refinements", cfg.max_refinements);
    }
    validate(c.options.quadrature);

    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        if (!n.is_object()) throw ConfigError("field 'noise' must be an object");
        detail::reject_unknown(n, {"delta", "trials"}, "noise.");
        NoiseSpec spec;
        spec.delta = field<double>(n, "delta", 0.0);
        if (!(spec.delta >= 0.0) || !std::isfinite(spec.delta)) throw ConfigError("field 'noise.delta' must be >= 0");
        spec.trials = static_cast<int>(detail::positive_size(n, "trials", 1));
        c.noise = spec;
    }
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0)) {
            throw ConfigError("field 'seed' must be a non-negative integer");
        }
        c.seed = s.get<std::uint64_t>();
    }

    c.input_csv = field<std::string>(j, "input_csv", "");
    c.output_csv = field<std::string>(j, "output_csv", "");
    c.oscillation_hint = field<double>(j, "oscillation_hint", 0.0);
    if (c.model == ModelKind::UserCsv) {
        if (c.input_csv.empty()) throw ConfigError("field 'input_csv' is required for model 'user_csv'");
        if (c.output_csv.empty()) throw ConfigError("field 'output_csv' is required for model 'user_csv'");
        if (!(c.oscillation_hint >= 0.0)) throw ConfigError("field 'oscillation_hint' must be >= 0");
    } else if (!c.input_csv.empty() || !c.output_csv.empty()) {
        throw ConfigError("fields 'input_csv'/'output_csv' are only valid with model 'user_csv'");
    }
    return c;
}

/// Signal pair named by the config (reads the CSV files for user data).
inline SignalPair make_pair(const ExperimentConfig& c) {
    SignalPair p;
    switch (c.model) {
        case ModelKind::Model1Printed: p = make_model1_pair(Model1Variant::Printed); break;
        case ModelKind::Model1Corrected: p = make_model1_pair(Model1Variant::Corrected); break;
        case ModelKind::Model2: p = make_model2_pair(c.options.quadrature); break;
        case ModelKind::UserCsv: {
            p = make_sampled_pair(read_signal_csv(c.input_csv), read_signal_csv(c.output_csv), c.oscillation_hint);
            if (std::abs(p.horizon - c.horizon) > kDomainTolerance * std::max(1.0, c.horizon)) {
                throw ConfigError("field 'T' does not match the last sample time of input_csv");
            }
            return p;
        }
    }
    p.horizon = c.horizon;
    return p;
}

inline NodeGrid make_grid(const ExperimentConfig& c) {
    return make_grid(c.options.scheme, node_count_for(c.method, c.sizes, c.lsm_nodes()), c.horizon);
}

struct IdentifyOutcome {
    IdentificationReport report;
    std::vector<ResidualPoint> curve;
    std::optional<StabilityResult> stability;
};

/**
 * Runs one identification job. With noise, the model is fitted on trial 0 of
 * the perturbed data and all residuals are measured against the clean pair.
 */
inline IdentifyOutcome run_identify(const ExperimentConfig& c) {
    const auto clean = make_pair(c);
    const auto grid = make_grid(c);
    const bool noisy = c.noise && c.noise->delta > 0.0;
    const auto fit = noisy ? noisy_pair(clean, grid.nodes, c.noise_spec(), 0) : clean;

    IdentifyOutcome out{identify_on_grid(fit, clean, c.sizes, c.method, grid, c.options), {}, std::nullopt};
    out.report.config_digest = c.digest();
    out.curve = residual_curve(out.report.expansion, clean, c.options.eval_points, c.options.quadrature);
    if (noisy) {
        StabilitySetup setup{clean, c.sizes, c.method, c.lsm_nodes(), c.options};
        out.stability = stability_experiment(setup, c.noise_spec());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Published tables.

enum class TableId { T1, T2, T3, T4, T5, T6 };

inline std::optional<TableId> parse_table_id(const std::string& s) {
    if (s == "T1") return TableId::T1;
    if (s == "T2") return TableId::T2;
    if (s == "T3") return TableId::T3;
    if (s == "T4") return TableId::T4;
    if (s == "T5") return TableId::T5;
    if (s == "T6") return TableId::T6;
    return std::nullopt;
}

inline const char* to_string(TableId t) {
    static const char* names[] = {"T1", "T2", "T3", "T4", "T5", "T6"};
    return names[static_cast<int>(t)];
}

struct TableRow {
    std::size_t m = 0;
    std::size_t multiplier = 0;  // LSM rows only
    double delta = 0.0;          // stability rows only
    double paper = 0.0;
    double computed = std::numeric_limits<double>::quiet_NaN();
    std::size_t numerical_rank = 0;
    std::string error;

    static TableRow collocation(std::size_t m, double paper) { return make(m, 0, 0.0, paper); }
    static TableRow lsm(std::size_t m, std::size_t multiplier, double paper) { return make(m, multiplier, 0.0, paper); }
    static TableRow noisy(std::size_t m, double delta, double paper) { return make(m, 0, delta, paper); }

    static TableRow make(std::size_t m, std::size_t multiplier, double delta, double paper) {
        TableRow r;
        r.m = m;
        r.multiplier = multiplier;
        r.delta = delta;
        r.paper = paper;
        return r;
    }

    [[nodiscard]] std::string label() const {
        std::string s = "m=" + std::to_string(m);
        if (multiplier) s += " k=(m+m^2)*" + std::to_string(multiplier);
        if (delta > 0.0) s += " delta=" + io::format_number(delta);
        return s;
    }
};

struct ReproduceOptions {
    Model1Variant model1_variant = Model1Variant::Corrected;
    GridScheme scheme = GridScheme::UniformIncludingZero;
    std::uint64_t seed = kDefaultSeed;
    int trials = 10;
    double rcond = kDefaultRcond;
};

/// Rows of a table with the reference values filled in; `computed` is empty.
inline std::vector<TableRow> table_rows(TableId id) {
    std::vector<TableRow> rows;
    auto lsm = [&](std::size_t m, const double (&paper)[3]) {
        const std::size_t mult[] = {2, 5, 10};
        for (int i = 0; i < 3; ++i) rows.push_back(TableRow::lsm(m, mult[i], paper[i]));
    };
    auto stability = [&](const double (&paper)[5]) {
        const double deltas[] = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
        for (int i = 0; i < 5; ++i) rows.push_back(TableRow::noisy(3, deltas[i], paper[i]));
    };
    switch (id) {
        case TableId::T1:
            rows = {TableRow::collocation(3, 1.41e-2), TableRow::collocation(4, 1.14e-6),  TableRow::collocation(5, 4.72e-9),  TableRow::collocation(6, 1.77e-12),
                    TableRow::collocation(7, 1.83e-14), TableRow::collocation(8, 1.53e-18), TableRow::collocation(10, 2.84e-26)};
            break;
        case TableId::T2:
            lsm(3, {8.07e-4, 8.07e-4, 8.07e-4});
            lsm(5, {4.92e-10, 3.90e-10, 4.90e-10});
            lsm(7, {2.50e-16, 1.50e-16, 2.87e-15});
            break;
        case TableId::T3:
            rows = {TableRow::collocation(3, 3.16e-5), TableRow::collocation(4, 9.85e-9), TableRow::collocation(5, 8.58e-12), TableRow::collocation(6, 2.17e-16),
                    TableRow::collocation(7, 5.37e-20)};
            break;
        case TableId::T4: stability({0.01729, 2.71e-3, 2.56e-4, 7.54e-5, 1.66e-5}); break;
        case TableId::T5:
            lsm(3, {2.38e-6, 2.63e-6, 3.48e-6});
            lsm(5, {7.77e-14, 7.46e-14, 7.41e-14});
            lsm(7, {2.93e-16, 3.05e-16, 3.80e-16});
            break;
        case TableId::T6: stability({0.00628, 5.11e-4, 6.02e-5, 5.36e-6, 2.64e-6}); break;
    }
    return rows;
}

/// Multiplier used by the least-squares stability table: k = (m + m^2) * 5.
inline constexpr std::size_t kStabilityLsmMultiplier = 5;

/**
 * Recomputes every row of a table. Rows run concurrently; a row whose solve
 * fails keeps NaN in `computed` and the message in `error`.
 */
inline std::vector<TableRow> run_table(TableId id, const ReproduceOptions& opts = {}) {
    auto rows = table_rows(id);
    const bool model1 = id == TableId::T1 || id == TableId::T2;
    const SignalPair pair = model1 ? make_model1_pair(opts.model1_variant) : make_model2_pair();
    IdentifyOptions identify;
    identify.scheme = opts.scheme;
    identify.rcond = opts.rcond;

    auto run_row = [&](TableRow row) {
        try {
            const auto sizes = Sizes::square(row.m);
            switch (id) {
                case TableId::T1:
                case TableId::T3: {
                    const auto r = identify_collocation(pair, sizes, identify);
                    row.computed = r.residual_max;
                    row.numerical_rank = r.numerical_rank;
                    break;
                }
                case TableId::T2:
                case TableId::T5: {
                    const auto r = identify_lsm(pair, sizes, sizes.unknowns() * row.multiplier, identify);
                    row.computed = r.residual_max;
                    row.numerical_rank = r.numerical_rank;
                    break;
                }
                case TableId::T4:
                case TableId::T6: {
                    StabilitySetup setup{pair, sizes, Method::Collocation, 0, identify};
                    if (id == TableId::T6) {
                        setup.method = Method::LeastSquares;
                        setup.lsm_nodes = sizes.unknowns() * kStabilityLsmMultiplier;
                    }
                    row.computed = stability_experiment(setup, {row.delta, opts.trials, opts.seed}).mean_residual;
                    break;
                }
            }
        } catch (const Error& e) {
            row.error = e.what();
        }
        return row;
    };

    std::vector<std::future<TableRow>> pending;
    for (const auto& row : rows) pending.push_back(std::async(std::launch::async, run_row, row));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = pending[i].get();
    return rows;
}

inline nlohmann::json reproduce_digest_source(TableId id, const ReproduceOptions& o) {
    return {{"table", to_string(id)},
            {"model1_variant", o.model1_variant == Model1Variant::Printed ? "printed" : "corrected"},
            {"grid", o.scheme == GridScheme::UniformIncludingZero ? "including_zero" : "excluding_zero"},
            {"seed", o.seed},
            {"trials", o.trials},
            {"rcond", o.rcond}};
}

inline std::string table_csv(TableId id, const ReproduceOptions& opts, const std::vector<TableRow>& rows) {
    io::CsvWriter w(io::digest(reproduce_digest_source(id, opts)),
                    {"table", "row", "m", "multiplier", "delta", "paper", "computed", "numerical_rank", "error"});
    for (const auto& r : rows) {
        w.row_text({to_string(id), r.label(), std::to_string(r.m), r.multiplier ? std::to_string(r.multiplier) : "",
                    r.delta > 0.0 ? io::format_number(r.delta) : "", io::format_number(r.paper),
                    r.error.empty() ? io::format_number(r.computed) : "nan",
                    r.error.empty() && r.delta == 0.0 ? std::to_string(r.numerical_rank) : "",
                    r.error.empty() ? "" : "\"" + r.error + "\""});
    }
    return w.str();
}

}  // namespace volterra
