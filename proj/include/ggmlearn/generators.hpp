#pragma once

// Synthetic model families: the path+cliques benchmark, random-walk /
// free-field models, and the named counterexample matrices. Each generator
// builds the side (covariance or precision) that has an exact closed form
// and derives the other numerically through GgmModel.

#include <cmath>
#include <string>
#include <vector>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/model.hpp"
#include "ggmlearn/rng.hpp"

namespace ggmlearn {

// ---------------------------------------------------------------------------
// Path + cliques
// ---------------------------------------------------------------------------

// First n/2 coordinates: Cov(X_i, X_j) = 1/2 + min(i,j)/n (1-based i,j).
// Remaining n/2: independent d-cliques with precision I - (rho/d) 11^T,
// rescaled to unit variances. standardize rescales every coordinate of the
// final model to unit variance.
inline GgmModel path_cliques(int n, int d, double rho, bool standardize = true) {
    if (n < 2 || n % 2 != 0) throw BadParamsError("path_cliques: n must be even and >= 2");
    if (d < 1 || (n / 2) % d != 0)
        throw BadParamsError("path_cliques: n/2 must be a multiple of d");
    if (!(rho > 0.0 && rho < 1.0)) throw BadParamsError("path_cliques: rho must be in (0,1)");
    int half = n / 2;
    SymMatrix sigma(n);
    for (int i = 0; i < half; ++i)
        for (int j = 0; j < half; ++j)
            sigma(i, j) = 0.5 + static_cast<double>(std::min(i, j) + 1) / n;
    // clique covariance (I + c 11^T) / v with c = rho/(d(1-rho)) and
    // v = 1 + c the common variance of I - (rho/d) 11^T; unit diagonal
    double c = rho / (d * (1.0 - rho));
    double v = 1.0 + c;
    for (int b = half; b < n; b += d)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                sigma(b + i, b + j) = ((i == j ? 1.0 : 0.0) + c) / v;
    if (standardize) {
        for (int i = 0; i < n; ++i)
            if (!(sigma(i, i) > 0.0)) throw NumericError("path_cliques: nonpositive variance");
        Vector s(n);
        for (int i = 0; i < n; ++i) s[i] = 1.0 / std::sqrt(sigma(i, i));
        sigma = apply_diagonal_congruence(sigma, s);
    }
    return GgmModel::from_covariance(std::move(sigma));
}

// ---------------------------------------------------------------------------
// Gaussian random walk / free field
// ---------------------------------------------------------------------------

// Random walk with N(0,1) increments observed at times start_time+1 ..
// start_time+n: Cov(X_i, X_j) = start_time + min(i,j). The precision is
// verified tridiagonal against the closed form.
inline GgmModel gaussian_walk(int n, int start_time) {
    if (n < 1) throw BadParamsError("gaussian_walk: n must be >= 1");
    if (start_time < 0) throw BadParamsError("gaussian_walk: start_time must be >= 0");
    SymMatrix sigma(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            sigma(i, j) = static_cast<double>(start_time) + (std::min(i, j) + 1);
    GgmModel m = GgmModel::from_covariance(std::move(sigma));
    // closed form: tridiag(-1) with diagonal [1 + 1/(t+1), 2, ..., 2, 1]
    const SymMatrix& t = m.theta();
    double scale = t.max_abs();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double expect = 0.0;
            if (i == j)
                expect = (n == 1)   ? 1.0 / (start_time + 1.0)
                         : (i == 0) ? 1.0 + 1.0 / (start_time + 1.0)
                         : (i == n - 1) ? 1.0
                                        : 2.0;
            else if (std::abs(i - j) == 1)
                expect = -1.0;
            if (std::abs(t(i, j) - expect) > 1e-7 * std::max(1.0, scale))
                throw NumericError("gaussian_walk: precision failed tridiagonal check");
        }
    return m;
}

struct WeightedEdge {
    int u, v;
    double w;
};

// Discrete Gaussian free field: graph Laplacian with the boundary rows and
// columns eliminated.
inline GgmModel gff(int num_nodes, const std::vector<WeightedEdge>& edges,
                    const std::vector<int>& boundary) {
    if (num_nodes < 2) throw BadParamsError("gff: need at least 2 nodes");
    if (boundary.empty()) throw BadParamsError("gff: boundary must be nonempty");
    SymMatrix lap(num_nodes);
    for (const auto& e : edges) {
        if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes || e.u == e.v)
            throw BadParamsError("gff: bad edge");
        if (!(e.w > 0.0)) throw BadParamsError("gff: edge weights must be positive");
        lap(e.u, e.v) -= e.w;
        lap(e.v, e.u) -= e.w;
        lap(e.u, e.u) += e.w;
        lap(e.v, e.v) += e.w;
    }
    std::vector<char> is_boundary(num_nodes, 0);
    for (int b : boundary) {
        if (b < 0 || b >= num_nodes) throw BadParamsError("gff: boundary node out of range");
        is_boundary[b] = 1;
    }
    std::vector<int> keep;
    for (int i = 0; i < num_nodes; ++i)
        if (!is_boundary[i]) keep.push_back(i);
    if (keep.empty()) throw BadParamsError("gff: all nodes are boundary");
    SymMatrix theta = lap.submatrix(keep);
    try {
        return GgmModel::from_precision(std::move(theta));
    } catch (const NotPdError&) {
        throw SingularLaplacianError("gff: graph is not connected through the boundary");
    }
}

// ---------------------------------------------------------------------------
// Hard examples: near-duplicate pairs on a sum-zero latent block
// ---------------------------------------------------------------------------

// 2d coordinates X_1..X_d, Y_1..Y_d with Cov(X_i,X_j) = Cov(Y_i,Y_j) =
// (delta_ij - 1/d) + delta^2 delta_ij and Cov(X_i,Y_j) = delta_ij - 1/d,
// padded block-diagonally with an identity of size n_pad.
inline SymMatrix break_greedy_covariance(int d, double delta, int n_pad) {
    if (d <= 2) throw BadParamsError("break_greedy: d must be > 2");
    if (!(delta > 0.0)) throw BadParamsError("break_greedy: delta must be > 0");
    if (n_pad < 0) throw BadParamsError("break_greedy: n_pad must be >= 0");
    int n = 2 * d + n_pad;
    SymMatrix sigma(n);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double k = (i == j ? 1.0 : 0.0) - 1.0 / d;
            double noise = (i == j) ? delta * delta : 0.0;
            sigma(i, j) = k + noise;          // X-X
            sigma(d + i, d + j) = k + noise;  // Y-Y
            sigma(i, d + j) = k;              // X-Y
            sigma(d + i, j) = k;
        }
    for (int i = 2 * d; i < n; ++i) sigma(i, i) = 1.0;
    return sigma;
}

inline GgmModel break_greedy(int d, double delta, int n_pad) {
    SymMatrix sigma = break_greedy_covariance(d, delta, n_pad);
    try {
        return GgmModel::from_covariance(std::move(sigma));
    } catch (const NotPdError&) {
        throw SingularCovarianceError(
            "break_greedy: covariance numerically singular at this delta");
    }
}

// The pre-permutation block of possibly_hard: break_greedy's covariance with
// the first d/4 X-nodes conditioned out (covariance-side Schur complement).
inline SymMatrix possibly_hard_block(int d, double delta) {
    if (d % 4 != 0) throw BadParamsError("possibly_hard: d must be divisible by 4");
    SymMatrix sigma = break_greedy_covariance(d, delta, 0);
    std::vector<int> keep;
    for (int i = d / 4; i < 2 * d; ++i) keep.push_back(i);
    return schur_complement(sigma, keep);
}

inline GgmModel possibly_hard(int d, double delta, int tiles, std::uint64_t permute_seed) {
    if (tiles < 1) throw BadParamsError("possibly_hard: tiles must be >= 1");
    SymMatrix block = possibly_hard_block(d, delta);
    int bs = static_cast<int>(block.n());
    int n = bs * tiles;
    SymMatrix sigma(n);
    for (int t = 0; t < tiles; ++t)
        for (int i = 0; i < bs; ++i)
            for (int j = 0; j < bs; ++j) sigma(t * bs + i, t * bs + j) = block(i, j);
    // seeded Fisher-Yates layout permutation
    CounterRng rng(derive_stream(permute_seed, "possibly_hard/permutation"));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(perm[i], perm[j]) = sigma(i, j);
    try {
        return GgmModel::from_covariance(std::move(out));
    } catch (const NotPdError&) {
        throw SingularCovarianceError(
            "possibly_hard: covariance numerically singular at this delta");
    }
}

// ---------------------------------------------------------------------------
// Named counterexamples (exact matrices)
// ---------------------------------------------------------------------------

struct CounterexampleParams {
    double eps = 0.01;    // no_apx_submodularity
    double big_m = 100.0;
    double c = 10.0;      // big_cancellation
    double kappa = 0.5;
    double r = 0.39;      // walk_summable_r
};

inline GgmModel counterexample(const std::string& name,
                               const CounterexampleParams& p = {}) {
    if (name == "no_submodularity") {
        SymMatrix t(3);
        t(0, 0) = t(1, 1) = t(2, 2) = 1.0;
        t.set(0, 1, -0.5);
        t.set(0, 2, -0.5);
        t.set(1, 2, 0.5);
        return GgmModel::from_precision(std::move(t));
    }
    if (name == "no_apx_submodularity") {
        if (!(p.eps > 0.0 && p.eps < 0.5 && p.big_m > 0.5))
            throw BadParamsError("no_apx_submodularity: need 0 < eps < 1/2 < M");
        SymMatrix t(3);
        t(0, 0) = 1.0;
        t(1, 1) = t(2, 2) = p.big_m;
        t.set(0, 1, -p.eps);
        t.set(0, 2, p.eps);
        t.set(1, 2, p.eps - p.big_m);
        return GgmModel::from_precision(std::move(t));
    }
    if (name == "big_cancellation") {
        if (!(p.c > 0.0 && p.kappa > 0.0 && p.kappa <= 1.0))
            throw BadParamsError("big_cancellation: need C > 0, kappa in (0,1]");
        double c2k = p.c * p.c / (p.kappa * p.kappa);
        SymMatrix t(3);
        t(0, 0) = 1.0;
        t(1, 1) = t(2, 2) = c2k;
        t.set(0, 1, p.c);
        t.set(0, 2, -p.c);
        t.set(1, 2, -c2k + 1.0);
        return GgmModel::from_precision(std::move(t));
    }
    if (name == "walk_summable_r") {
        if (!(p.r > 0.0 && p.r < 0.5))
            throw BadParamsError("walk_summable_r: r out of the documented range");
        double r = p.r;
        SymMatrix t(4);
        for (int i = 0; i < 4; ++i) t(i, i) = 1.0;
        t.set(0, 1, -r);
        t.set(0, 2, r);
        t.set(0, 3, r);
        t.set(1, 2, r);
        t.set(1, 3, 0.0);
        t.set(2, 3, r);
        return GgmModel::from_precision(std::move(t));
    }
    throw UnknownNameError("counterexample: unknown name '" + name + "'");
}

// ---------------------------------------------------------------------------
// GeneratorSpec: one value describing any synthetic family
// ---------------------------------------------------------------------------

struct GeneratorSpec {
    enum class Family {
        path_cliques,
        gaussian_walk,
        gff,
        break_greedy,
        possibly_hard,
        named_counterexample,
    };

    Family family = Family::path_cliques;
    int n = 0;
    int d = 4;
    double rho = 0.95;
    int start_time = -1;  // gaussian_walk; -1 means "equal to n"
    double delta = 1e-3;  // break_greedy / possibly_hard
    int n_pad = 0;
    int tiles = 1;
    std::uint64_t permute_seed = 0;
    bool standardize = true;
    std::string counterexample_name;
    CounterexampleParams cparams;
    // gff inputs
    int gff_nodes = 0;
    std::vector<WeightedEdge> gff_edges;
    std::vector<int> gff_boundary;

    GgmModel build() const { return build_with_n(n); }

    GgmModel build_with_n(int n_override) const {
        switch (family) {
            case Family::path_cliques:
                return path_cliques(n_override, d, rho, standardize);
            case Family::gaussian_walk:
                return gaussian_walk(n_override,
                                     start_time >= 0 ? start_time : n_override);
            case Family::gff:
                return gff(gff_nodes, gff_edges, gff_boundary);
            case Family::break_greedy:
                return break_greedy(d, delta, n_pad);
            case Family::possibly_hard:
                return possibly_hard(d, delta, tiles, permute_seed);
            case Family::named_counterexample:
                return counterexample(counterexample_name, cparams);
        }
        throw BadParamsError("GeneratorSpec: unknown family");
    }

    static Family family_from_string(const std::string& s) {
        if (s == "path-cliques" || s == "path_cliques") return Family::path_cliques;
        if (s == "gaussian-walk" || s == "gaussian_walk") return Family::gaussian_walk;
        if (s == "gff") return Family::gff;
        if (s == "break-greedy" || s == "break_greedy") return Family::break_greedy;
        if (s == "possibly-hard" || s == "possibly_hard") return Family::possibly_hard;
        if (s == "counterexample") return Family::named_counterexample;
        throw BadParamsError("unknown generator family '" + s + "'");
    }
};

}  // namespace ggmlearn
