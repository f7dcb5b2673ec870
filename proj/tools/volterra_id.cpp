// volterra-id: identify Volterra kernels and reproduce the reference residual tables.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "volterra/volterra.hpp"

namespace {

namespace fs = std::filesystem;
using namespace volterra;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::uint64_t parse_seed(const std::string& text, const char* source) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(source) + ": seed must be a non-negative integer, got '" + text + "'");
    }
}

/// VOLTERRA_ID_SEED, when set, wins over any seed given in a file or flag.
std::optional<std::uint64_t> env_seed() {
    if (const char* s = std::getenv("VOLTERRA_ID_SEED"); s && *s) return parse_seed(s, "VOLTERRA_ID_SEED");
    return std::nullopt;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    auto cfg = parse_config(j);
    if (auto s = env_seed()) cfg.seed = *s;
    return cfg;
}

int cmd_reproduce(const std::string& table, const std::string& variant, const std::string& grid,
                  std::optional<std::uint64_t> seed, const fs::path& out) {
    const auto id = parse_table_id(table);
    if (!id) throw ConfigError("--table: unknown table '" + table + "' (expected T1..T6)");
    ReproduceOptions opts;
    if (variant == "printed") opts.model1_variant = Model1Variant::Printed;
    else if (variant != "corrected") throw ConfigError("--model1-variant: expected printed or corrected");
    if (grid == "excluding_zero") opts.scheme = GridScheme::UniformExcludingZero;
    else if (grid != "including_zero") throw ConfigError("--grid: expected including_zero or excluding_zero");
    if (seed) opts.seed = *seed;
    if (auto s = env_seed()) opts.seed = *s;

    const auto rows = run_table(*id, opts);
    const fs::path file = out / ("table_" + table + ".csv");
    io::write_atomic(file, table_csv(*id, opts, rows));

    int status = kExitOk;
    for (const auto& r : rows) {
        std::cout << table << "  " << r.label() << "  paper=" << io::format_number(r.paper);
        if (r.error.empty()) {
            std::cout << "  computed=" << io::format_number(r.computed) << '\n';
        } else {
            std::cout << "  FAILED: " << r.error << '\n';
            status = kExitNumerical;
        }
    }
    std::cout << "wrote " << file.string() << '\n';
    return status;
}

int cmd_identify(const std::string& config_path, const fs::path& out) {
    const auto cfg = load_config(config_path);
    const auto result = run_identify(cfg);
    const auto digest = cfg.digest();

    auto report = io::to_json(result.report);
    report["config"] = cfg.canonical();
    if (result.stability) {
        report["stability"] = {{"mean_residual", result.stability->mean_residual},
                               {"trial_residuals", result.stability->trial_residuals}};
    }
    io::write_atomic(out / "report.json", report.dump(2) + "\n");
    io::write_atomic(out / "kernel1.csv", io::kernel1_csv(result.report.expansion, digest));
    io::write_atomic(out / "kernel2.csv", io::kernel2_csv(result.report.expansion, digest));
    io::write_atomic(out / "residual.csv", io::residual_csv(result.curve, digest));

    std::cout << "method=" << to_string(cfg.method) << " residual_max=" << io::format_number(result.report.residual_max)
              << " node_residual_max=" << io::format_number(result.report.node_residual_max)
              << " rank=" << result.report.numerical_rank << '\n'
              << "wrote " << out.string() << '\n';
    return kExitOk;
}

int cmd_export_system(const std::string& config_path, const fs::path& out) {
    const auto cfg = load_config(config_path);
    const auto clean = make_pair(cfg);
    const auto grid = make_grid(cfg);
    const bool noisy = cfg.noise && cfg.noise->delta > 0.0;
    const auto pair = noisy ? noisy_pair(clean, grid.nodes, cfg.noise_spec(), 0) : clean;
    const auto sys = assemble(cfg.sizes, grid, pair, cfg.options.quadrature);
    const auto digest = cfg.digest();
    io::write_atomic(out / "system_matrix.csv", io::system_matrix_csv(sys, digest));
    io::write_atomic(out / "system_rhs.csv", io::system_rhs_csv(sys, digest));
    std::cout << "rows=" << sys.matrix.rows() << " cols=" << sys.matrix.cols() << '\n'
              << "wrote " << out.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volterra kernel identification by Chebyshev collocation and least squares"};
    app.require_subcommand(1);

    std::string table;
    std::string variant = "corrected";
    std::string grid = "including_zero";
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string config;

    auto* reproduce = app.add_subcommand("reproduce", "Recompute one of the reference residual tables");
    reproduce->add_option("--table", table, "T1..T6")->required();
    reproduce->add_option("--model1-variant", variant, "printed|corrected (tables T1, T2)");
    reproduce->add_option("--grid", grid, "including_zero|excluding_zero");
    reproduce->add_option("--seed", seed, "noise seed for T4/T6");
    reproduce->add_option("--out", out, "output directory");

    auto* identify = app.add_subcommand("identify", "Identify kernels for one configuration");
    identify->add_option("--config", config, "JSON configuration")->required();
    identify->add_option("--out", out, "output directory");

    auto* export_system = app.add_subcommand("export-system", "Write the assembled matrix and right-hand side");
    export_system->add_option("--config", config, "JSON configuration")->required();
    export_system->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*reproduce) return cmd_reproduce(table, variant, grid, seed, out);
        if (*identify) return cmd_identify(config, out);
        if (*export_system) return cmd_export_system(config, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
