#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volterra/assembly.hpp"
#include "volterra/errors.hpp"
#include "volterra/solver.hpp"

namespace volterra::io {

using nlohmann::json;

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Digest of a JSON value in its canonical (sorted-key, compact) dump.
inline std::string digest(const json& j) { return fnv1a_hex(j.dump()); }

/// Shortest decimal text that round-trips to the same double.
inline std::string format_number(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

/// Writes `content` to `path` via a temporary file and rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

/// CSV text builder; every file starts with a `# config-digest:` comment line.
class CsvWriter {
public:
    CsvWriter(const std::string& config_digest, const std::vector<std::string>& header) {
        out_ << "# config-digest: " << config_digest << '\n';
        write_row_text(header);
    }

    void comment(const std::string& text) { out_ << "# " << text << '\n'; }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_number(values[i]);
        }
        out_ << '\n';
    }

    void row_text(const std::vector<std::string>& cells) { write_row_text(cells); }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    void write_row_text(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ostringstream out_;
};

inline json to_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

inline json to_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        j.push_back(std::move(row));
    }
    return j;
}

inline json to_json(const IdentificationReport& r) {
    const auto& e = r.expansion;
    json j;
    j["method"] = to_string(r.method);
    j["sizes"] = {{"m", e.sizes.m}, {"m1", e.sizes.m1}, {"m2", e.sizes.m2}};
    j["basis"] = {{"kind", "chebyshev_first_kind"}, {"count", e.basis.count()}, {"horizon", e.basis.horizon()}};
    j["coefficients"] = {{"a", to_json(e.a)}, {"c", to_json(e.c)}, {"c_symmetric", to_json(e.symmetrized_c())}};
    j["residual_max"] = r.residual_max;
    j["node_residual_max"] = r.node_residual_max;
    j["numerical_rank"] = r.numerical_rank;
    j["truncation_threshold"] = r.truncation_threshold;
    j["grid"] = {{"scheme", to_string(r.grid.scheme)}, {"nodes", r.grid.nodes}};
    j["config_digest"] = r.config_digest;
    return j;
}

/// K1 on `points` uniform samples of [0, T].
inline std::string kernel1_csv(const KernelExpansion& e, const std::string& digest, std::size_t points = 200) {
    CsvWriter w(digest, {"s", "k1"});
    for (double s : uniform_points(points, e.basis.horizon())) w.row({s, e.k1(s)});
    return w.str();
}

/// Symmetrized K2 on a points x points uniform grid, long format.
inline std::string kernel2_csv(const KernelExpansion& e, const std::string& digest, std::size_t points = 100) {
    KernelExpansion sym = e;
    sym.c = e.symmetrized_c();
    CsvWriter w(digest, {"s1", "s2", "k2"});
    const auto grid = uniform_points(points, e.basis.horizon());
    for (double s1 : grid) {
        const auto b1 = basis_row(sym.basis, s1);
        for (double s2 : grid) {
            const auto b2 = basis_row(sym.basis, s2);
            double v = 0.0;
            for (Eigen::Index i = 0; i < sym.c.rows(); ++i) {
                for (Eigen::Index k = 0; k < sym.c.cols(); ++k) v += sym.c(i, k) * b1[i] * b2[k];
            }
            w.row({s1, s2, v});
        }
    }
    return w.str();
}

inline std::string residual_csv(const std::vector<ResidualPoint>& curve, const std::string& digest) {
    CsvWriter w(digest, {"t", "residual"});
    for (const auto& p : curve) w.row({p.t, p.residual});
    return w.str();
}

inline std::string system_matrix_csv(const AssembledSystem& sys, const std::string& digest) {
    std::vector<std::string> header{"t"};
    for (const auto& c : sys.columns) header.push_back(c.name());
    CsvWriter w(digest, header);
    for (Eigen::Index k = 0; k < sys.matrix.rows(); ++k) {
        std::vector<double> row{sys.grid.nodes[static_cast<std::size_t>(k)]};
        for (Eigen::Index c = 0; c < sys.matrix.cols(); ++c) row.push_back(sys.matrix(k, c));
        w.row(row);
    }
    return w.str();
}

inline std::string system_rhs_csv(const AssembledSystem& sys, const std::string& digest) {
    CsvWriter w(digest, {"t", "y"});
    for (Eigen::Index k = 0; k < sys.rhs.size(); ++k) w.row({sys.grid.nodes[static_cast<std::size_t>(k)], sys.rhs[k]});
    return w.str();
}

}  // namespace volterra::io
