#pragma once

// File formats. Writing goes through a small canonical emitter: fixed key
// order, floats at 17 significant digits, newline-terminated — so identical
// runs produce byte-identical files. Reading uses nlohmann/json.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/evalbench.hpp"
#include "ggmlearn/learners.hpp"
#include "ggmlearn/model.hpp"
#include "ggmlearn/sampler.hpp"

namespace ggmlearn {

namespace jsonw {

inline std::string num(double v) { return format_g17(v); }

inline std::string matrix(const SymMatrix& m) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < m.n(); ++i) {
        os << (i ? ", " : "") << "[";
        for (std::size_t j = 0; j < m.n(); ++j) os << (j ? ", " : "") << num(m(i, j));
        os << "]";
    }
    os << "]";
    return os.str();
}

inline std::string vec(const Vector& v) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << num(v[i]);
    os << "]";
    return os.str();
}

inline std::string ivec(const std::vector<int>& v) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << "]";
    return os.str();
}

inline std::string edges(const std::vector<std::pair<int, int>>& e) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < e.size(); ++i)
        os << (i ? ", " : "") << "[" << e[i].first << ", " << e[i].second << "]";
    os << "]";
    return os.str();
}

}  // namespace jsonw

// Model file: {"n": ..., "precision": [[...]]}
inline void write_model_file(const GgmModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw BadParamsError("write_model_file: cannot open " + path);
    f << "{\n  \"n\": " << m.n() << ",\n  \"precision\": " << jsonw::matrix(m.theta())
      << "\n}\n";
}

inline GgmModel read_model_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw BadParamsError("read_model_file: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadParamsError(std::string("read_model_file: parse error: ") + e.what());
    }
    if (!j.contains("n") || !j.contains("precision"))
        throw BadParamsError("read_model_file: need keys n and precision");
    std::size_t n = j["n"].get<std::size_t>();
    const auto& rows = j["precision"];
    if (rows.size() != n) throw BadParamsError("read_model_file: row count mismatch");
    Matrix raw(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw BadParamsError("read_model_file: ragged precision");
        for (std::size_t k = 0; k < n; ++k) raw(i, k) = rows[i][k].get<double>();
    }
    // validates symmetry; SPD is checked by the model constructor
    return GgmModel::from_precision(SymMatrix::from_dense(raw));
}

// Result file written by `learn`; resolved config and the seed are embedded
// so a run can be reproduced from its own output.
struct LearnRunRecord {
    std::string algorithm;
    LearnerConfig cfg;
    std::uint64_t seed = 0;
    bool population = false;
    bool standardized = true;
    std::string split_mode;
    LearnOutput output;
};

inline void write_result_file(const LearnRunRecord& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw BadParamsError("write_result_file: cannot open " + path);
    f << "{\n";
    f << "  \"algorithm\": \"" << r.algorithm << "\",\n";
    f << "  \"config\": {";
    f << "\"nu\": " << jsonw::num(r.cfg.nu) << ", \"t_steps\": " << r.cfg.t_steps
      << ", \"kappa\": " << jsonw::num(r.cfg.kappa) << ", \"d\": " << r.cfg.d
      << ", \"tau\": " << jsonw::num(r.cfg.tau) << ", \"gamma\": " << jsonw::num(r.cfg.gamma)
      << ", \"gamma_prime\": " << jsonw::num(r.cfg.gamma_prime)
      << ", \"split_mode\": \"" << r.split_mode << "\""
      << ", \"population\": " << (r.population ? "true" : "false")
      << ", \"standardized\": " << (r.standardized ? "true" : "false")
      << ", \"seed\": " << r.seed << "},\n";
    f << "  \"theta_hat\": " << jsonw::matrix(r.output.estimate.theta_hat) << ",\n";
    f << "  \"edges\": " << jsonw::edges(r.output.estimate.edges) << ",\n";
    f << "  \"per_node\": [";
    for (std::size_t i = 0; i < r.output.per_node.size(); ++i) {
        const auto& e = r.output.per_node[i];
        f << (i ? ", " : "") << "{\"node\": " << e.node
          << ", \"support\": " << jsonw::ivec(e.support)
          << ", \"coefficients\": " << jsonw::vec(e.coefficients)
          << ", \"sigma_hat_sq\": " << jsonw::num(e.sigma_hat_sq)
          << ", \"validated\": " << (e.validated ? "true" : "false") << ", \"omp_trace\": [";
        for (std::size_t s = 0; s < e.diagnostics.size(); ++s) {
            const auto& st = e.diagnostics[s];
            f << (s ? ", " : "") << "{\"picked\": " << st.picked
              << ", \"decrement\": " << jsonw::num(st.decrement)
              << ", \"var_after\": " << jsonw::num(st.var_after) << "}";
        }
        f << "]}";
    }
    f << "]\n}\n";
}

struct ResultFile {
    std::string algorithm;
    PrecisionEstimate estimate;
};

inline ResultFile read_result_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw BadParamsError("read_result_file: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadParamsError(std::string("read_result_file: parse error: ") + e.what());
    }
    ResultFile r;
    r.algorithm = j.value("algorithm", "");
    const auto& rows = j.at("theta_hat");
    std::size_t n = rows.size();
    Matrix raw(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) raw(i, k) = rows[i][k].get<double>();
    r.estimate.theta_hat = SymMatrix::from_dense(raw);
    for (const auto& e : j.at("edges"))
        r.estimate.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    return r;
}

inline void write_metrics_file(const std::string& path, double structure_err, double l1_err,
                               std::optional<double> cv,
                               std::optional<double> ws_dist = std::nullopt) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw BadParamsError("write_metrics_file: cannot open " + path);
    f << "{\n  \"structure_error\": " << jsonw::num(structure_err)
      << ",\n  \"l1_error\": " << jsonw::num(l1_err);
    if (cv) f << ",\n  \"cv_objective\": " << jsonw::num(*cv);
    if (ws_dist) f << ",\n  \"ws_distance\": " << jsonw::num(*ws_dist);
    f << "\n}\n";
}

inline void write_sweep_summary_file(const SweepResult& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw BadParamsError("write_sweep_summary_file: cannot open " + path);
    f << "{\n  \"per_n\": [";
    for (std::size_t i = 0; i < r.summary.size(); ++i) {
        const auto& s = r.summary[i];
        f << (i ? ", " : "") << "{\"n\": " << s.n << ", \"min_m\": " << s.min_m
          << ", \"best_cfg_id\": \"" << s.best_cfg_id
          << "\", \"best_error\": " << jsonw::num(s.best_error) << "}";
    }
    f << "]\n}\n";
}

// Hyperparameter grid file: {"<algorithm>": {"<param>": [values...], ...}}.
// The cartesian product over the listed parameters forms the grid.
inline std::vector<NamedConfig> read_grid_file(const std::string& path,
                                               const std::string& algorithm,
                                               const LearnerConfig& base) {
    std::ifstream f(path);
    if (!f) throw BadParamsError("read_grid_file: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadParamsError(std::string("read_grid_file: parse error: ") + e.what());
    }
    if (!j.contains(algorithm))
        throw BadParamsError("read_grid_file: no grid for algorithm '" + algorithm + "'");
    const auto& g = j[algorithm];
    std::vector<std::pair<std::string, std::vector<double>>> axes;
    for (auto it = g.begin(); it != g.end(); ++it) {
        std::vector<double> vals;
        for (const auto& v : it.value()) vals.push_back(v.get<double>());
        if (vals.empty()) throw BadParamsError("read_grid_file: empty axis " + it.key());
        axes.emplace_back(it.key(), std::move(vals));
    }
    std::vector<NamedConfig> out;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        LearnerConfig c = base;
        std::string id;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            double v = axes[a].second[idx[a]];
            const std::string& key = axes[a].first;
            if (key == "nu") c.nu = v;
            else if (key == "t_steps") c.t_steps = static_cast<int>(v);
            else if (key == "tau") c.tau = v;
            else if (key == "gamma") c.gamma = v;
            else if (key == "gamma_prime") c.gamma_prime = v;
            else if (key == "d") c.d = static_cast<int>(v);
            else throw BadParamsError("read_grid_file: unknown parameter '" + key + "'");
            if (!id.empty()) id += ",";
            id += key + "=" + format_g17(v);
        }
        out.push_back({id, c});
        std::size_t a = 0;
        while (a < axes.size() && ++idx[a] == axes[a].second.size()) {
            idx[a] = 0;
            ++a;
        }
        if (a == axes.size()) break;
    }
    return out;
}

}  // namespace ggmlearn
