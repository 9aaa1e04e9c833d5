#pragma once

// Deterministic sampling from a GgmModel plus the empirical-moment helpers
// the estimators need. Samples are bit-reproducible for a fixed
// (model, m, seed) on a fixed platform: row r draws its gaussians from
// addressed positions of the stream, so parallel generation cannot reorder
// anything.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/matrix.hpp"
#include "ggmlearn/model.hpp"
#include "ggmlearn/rng.hpp"

namespace ggmlearn {

struct SampleSet {
    std::size_t m = 0, n = 0;
    Vector data;  // row-major, m x n
    std::uint64_t seed = 0;
    std::uint64_t source_model_hash = 0;
    // named contiguous row ranges [first, last); "all" always present
    std::map<std::string, std::pair<std::size_t, std::size_t>> splits;

    double operator()(std::size_t r, std::size_t c) const { return data[r * n + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data[r * n + c]; }

    std::pair<std::size_t, std::size_t> split_range(const std::string& name) const {
        auto it = splits.find(name);
        if (it == splits.end()) throw EmptySplitError("SampleSet: unknown split '" + name + "'");
        if (it->second.first >= it->second.second)
            throw EmptySplitError("SampleSet: split '" + name + "' is empty");
        return it->second;
    }
};

inline SampleSet sample(const GgmModel& model, std::size_t m, std::uint64_t seed) {
    if (m < 1) throw BadParamsError("sample: m must be >= 1");
    auto chol = cholesky(model.sigma());  // NotPD propagates
    std::size_t n = model.n();
    SampleSet s;
    s.m = m;
    s.n = n;
    s.seed = seed;
    s.source_model_hash = model_hash(model);
    s.data.resize(m * n);
    s.splits["all"] = {0, m};
    CounterRng rng(derive_stream(seed, "sampler/gaussians"));
    Vector z(n);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < n; ++j)
            z[j] = rng.gaussian_at(static_cast<std::uint64_t>(r) * n + j);
        // x = L z
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) acc += chol.l(i, j) * z[j];
            s(r, i) = acc;
        }
    }
    return s;
}

// (1/m) X^T X over the split rows; the model is mean zero so no centering.
inline SymMatrix empirical_covariance(const SampleSet& s, const std::string& split = "all") {
    auto [lo, hi] = s.split_range(split);
    std::size_t m = hi - lo, n = s.n;
    SymMatrix cov(n);
    for (std::size_t r = lo; r < hi; ++r)
        for (std::size_t i = 0; i < n; ++i) {
            double xi = s(r, i);
            for (std::size_t j = i; j < n; ++j) cov(i, j) += xi * s(r, j);
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double v = cov(i, j) / static_cast<double>(m);
            cov.set(i, j, v);
        }
    return cov;
}

// Mean-centers and scales each column to unit empirical variance; returns the
// scale vector (the standard deviations) for un-mapping estimates.
inline std::pair<SampleSet, Vector> standardize(const SampleSet& s) {
    SampleSet out = s;
    Vector scale(s.n);
    for (std::size_t c = 0; c < s.n; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < s.m; ++r) mean += s(r, c);
        mean /= static_cast<double>(s.m);
        double var = 0.0;
        for (std::size_t r = 0; r < s.m; ++r) {
            double d = s(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(s.m);
        if (!(var > 0.0))
            throw ZeroVarianceColumnError("standardize: column " + std::to_string(c) +
                                          " has zero variance");
        double sd = std::sqrt(var);
        scale[c] = sd;
        for (std::size_t r = 0; r < s.m; ++r) out(r, c) = (s(r, c) - mean) / sd;
    }
    return {std::move(out), std::move(scale)};
}

// Registers contiguous splits s1..s<parts> of floor(m/parts) rows each;
// remainder rows belong to no split. Splitting is deliberately not shuffled:
// rows are i.i.d. by construction.
inline SampleSet split(const SampleSet& s, int parts) {
    if (parts != 2 && parts != 3) throw BadParamsError("split: parts must be 2 or 3");
    std::size_t block = s.m / static_cast<std::size_t>(parts);
    if (block < 1) throw TooFewSamplesError("split: fewer samples than parts");
    SampleSet out = s;
    for (int p = 0; p < parts; ++p)
        out.splits["s" + std::to_string(p + 1)] = {block * p, block * (p + 1)};
    return out;
}

// ---------------------------------------------------------------------------
// CSV: header "x1,...,xn", one row per sample, 17 significant digits
// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const SampleSet& s, std::ostream& os) {
    for (std::size_t c = 0; c < s.n; ++c) os << (c ? "," : "") << "x" << (c + 1);
    os << "\n";
    for (std::size_t r = 0; r < s.m; ++r) {
        for (std::size_t c = 0; c < s.n; ++c) os << (c ? "," : "") << format_g17(s(r, c));
        os << "\n";
    }
}

inline void write_csv_file(const SampleSet& s, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw BadParamsError("write_csv: cannot open " + path);
    write_csv(s, f);
}

inline SampleSet read_csv(std::istream& is) {
    SampleSet s;
    std::string line;
    if (!std::getline(is, line)) throw BadParamsError("read_csv: empty file");
    std::size_t n = 1;
    for (char c : line)
        if (c == ',') ++n;
    s.n = n;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t next = line.find(',', pos);
            std::string tok = line.substr(pos, next == std::string::npos
                                                   ? std::string::npos
                                                   : next - pos);
            double v = 0.0;
            auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{}) throw BadParamsError("read_csv: bad number '" + tok + "'");
            s.data.push_back(v);
            pos = (next == std::string::npos) ? line.size() : next + 1;
        }
        ++s.m;
    }
    if (s.m == 0) throw BadParamsError("read_csv: no sample rows");
    s.splits["all"] = {0, s.m};
    return s;
}

inline SampleSet read_csv_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw BadParamsError("read_csv: cannot open " + path);
    return read_csv(f);
}

}  // namespace ggmlearn
