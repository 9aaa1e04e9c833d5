#pragma once

// The structure learners: greedy-and-prune, exhaustive l0 search with
// validation, the single-greedy-step + l1 regression per node, and the
// bidirectional edge test built on it. Also neighborhood merging,
// symmetrization and normalized edge thresholding.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/matrix.hpp"
#include "ggmlearn/regress.hpp"

namespace ggmlearn {

struct LearnerConfig {
    double nu = 0.0;          // pruning / validation threshold
    int t_steps = 0;          // OMP steps (T); clamped to the candidate count
    double kappa = 0.0;       // informational; used by the per-learner defaults
    int d = 0;                // degree cap (search, ws-regression grid)
    double tau = 0.0;         // HybridMB edge test level
    double gamma = 2.0;       // ws-regression exit factor
    double gamma_prime = 0.0; // > 0 engages the d-free grid (gamma' = 2 d gamma^2)
    bool split_samples = false;  // HybridMB: split into 3 sets vs single set
    std::size_t enum_budget = 2'000'000;  // search_and_validate subset cap
    double l1_tol = 1e-8;
    int l1_max_iter = 20000;

    static LearnerConfig greedy_defaults(double kappa, int d) {
        LearnerConfig c;
        c.kappa = kappa;
        c.d = d;
        c.nu = kappa * kappa / std::sqrt(32.0);
        c.t_steps = static_cast<int>(64.0 * d * std::log(4.0 / (kappa * kappa))) + 1;
        return c;
    }
    static LearnerConfig search_defaults(double kappa, int d) {
        LearnerConfig c;
        c.kappa = kappa;
        c.d = d;
        c.nu = kappa * kappa / 2.0;
        return c;
    }
    static LearnerConfig hybrid_defaults(double kappa, int d) {
        LearnerConfig c;
        c.kappa = kappa;
        c.d = d;
        c.tau = kappa * kappa / 8.0;
        c.gamma = 2.0;
        return c;
    }
};

struct NeighborhoodEstimate {
    int node = -1;
    std::vector<int> support;
    Vector coefficients;       // aligned with support
    double sigma_hat_sq = 0.0; // 1 / Theta-hat_ii
    OmpTrace diagnostics;
    bool validated = true;     // search_and_validate only
};

struct PrecisionEstimate {
    SymMatrix theta_hat;
    std::vector<std::pair<int, int>> edges;
};

// Sample splits a learner may consume. Population mode: all three views are
// the same exact-covariance view.
struct LearnerData {
    DataView s1, s2, s3;

    static LearnerData population(const SymMatrix& sigma) {
        DataView v = DataView::population(sigma);
        return {v, v, v};
    }
    static LearnerData single(const SampleSet& s) {
        DataView v = DataView::from_samples(s);
        return {v, v, v};
    }
    static LearnerData split3(const SampleSet& s) {
        auto sp = std::make_shared<const SampleSet>(split(s, 3));
        return {DataView::from_samples_shared(sp, "s1"),
                DataView::from_samples_shared(sp, "s2"),
                DataView::from_samples_shared(sp, "s3")};
    }
    static LearnerData split2(const SampleSet& s) {
        auto sp = std::make_shared<const SampleSet>(split(s, 2));
        DataView a = DataView::from_samples_shared(sp, "s1");
        DataView b = DataView::from_samples_shared(sp, "s2");
        return {a, b, b};
    }
};

namespace detail {

// conditional-variance memo keyed by the sorted conditioning set
class CondVarCache {
  public:
    CondVarCache(const DataView& v, int node) : v_(&v), node_(node) {}

    double operator()(std::vector<int> s) {
        std::sort(s.begin(), s.end());
        auto it = cache_.find(s);
        if (it != cache_.end()) return it->second;
        double val = cond_var_estimate(*v_, node_, s);
        cache_.emplace(std::move(s), val);
        return val;
    }

  private:
    const DataView* v_;
    int node_;
    std::map<std::vector<int>, double> cache_;
};

inline std::vector<int> all_but(std::size_t n, int i) {
    std::vector<int> out;
    out.reserve(n - 1);
    for (std::size_t k = 0; k < n; ++k)
        if (static_cast<int>(k) != i) out.push_back(static_cast<int>(k));
    return out;
}

// final coefficients + noise from a fresh fit on the pruned support
inline void finalize_fit(const DataView& v, int node, NeighborhoodEstimate& est) {
    if (est.support.empty()) {
        est.coefficients.clear();
        est.sigma_hat_sq = cond_var_estimate(v, node, {});
        return;
    }
    if (v.is_population()) {
        const SymMatrix& sig = v.moments();
        SymMatrix ss = sig.submatrix(est.support);
        Vector si(est.support.size());
        for (std::size_t k = 0; k < est.support.size(); ++k) si[k] = sig(est.support[k], node);
        est.coefficients = solve_spd(ss, si);
        est.sigma_hat_sq = sig(node, node) - dot(si, est.coefficients);
        return;
    }
    Matrix x = v.columns(est.support);
    Vector y = v.column(node);
    RegressionFit f = ols(x, y);
    est.coefficients = f.coefficients;
    est.sigma_hat_sq = f.sigma_hat_sq;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GreedyAndPrune
// ---------------------------------------------------------------------------

// T OMP steps, freeze Theta-hat_ii from the post-OMP conditional variance,
// then one pruning sweep in insertion order. The conditional variance of the
// current (shrinking) set is recomputed after every accepted removal;
// Theta-hat_ii is not.
inline NeighborhoodEstimate greedy_and_prune(const LearnerData& data, int i,
                                             const LearnerConfig& cfg) {
    if (cfg.nu < 0.0 || cfg.t_steps < 0)
        throw BadParamsError("greedy_and_prune: need nu >= 0 and t_steps >= 0");
    const DataView& v = data.s1;
    NeighborhoodEstimate est;
    est.node = i;
    if (v.dim() <= 1) {
        detail::finalize_fit(v, i, est);
        return est;
    }
    std::vector<int> candidates = detail::all_but(v.dim(), i);
    int t = std::min<int>(cfg.t_steps, static_cast<int>(candidates.size()));
    std::vector<int> s = omp(v, i, candidates, t, &est.diagnostics);

    detail::CondVarCache cv(v, i);
    double var_s = cv(s);
    if (!(var_s > 0.0))
        throw NumericError("greedy_and_prune: nonpositive conditional variance");
    double threshold = cfg.nu * var_s;  // nu / Theta-hat_ii with Theta-hat_ii frozen

    std::vector<int> current = s;
    for (int j : s) {  // OMP insertion order
        std::vector<int> without;
        without.reserve(current.size());
        for (int c : current)
            if (c != j) without.push_back(c);
        double var_without = cv(without);
        if (var_without - var_s < threshold) {
            current = std::move(without);
            var_s = var_without;
        }
    }
    est.support = std::move(current);
    detail::finalize_fit(v, i, est);
    return est;
}

// ---------------------------------------------------------------------------
// SearchAndValidate
// ---------------------------------------------------------------------------

namespace detail {

// enumerate size-k subsets of `universe` in colexicographic order
template <typename F>
void for_each_subset(const std::vector<int>& universe, int k, F&& fn) {
    int n = static_cast<int>(universe.size());
    if (k == 0) {
        fn(std::vector<int>{});
        return;
    }
    if (k > n) return;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    std::vector<int> subset(k);
    while (true) {
        for (int i = 0; i < k; ++i) subset[i] = universe[idx[i]];
        fn(subset);
        // colex successor: bump the lowest index that can move
        int i = 0;
        while (i < k) {
            int cap = (i + 1 < k) ? idx[i + 1] : n;
            if (idx[i] + 1 < cap) break;
            ++i;
        }
        if (i == k) return;
        ++idx[i];
        for (int r = 0; r < i; ++r) idx[r] = r;
    }
}

inline double enumeration_count(std::size_t n, int d) {
    double total = 0.0, c = 1.0;
    for (int k = 0; k <= d; ++k) {
        total += c;
        c = c * static_cast<double>(n - k) / static_cast<double>(k + 1);
    }
    return total;
}

// population or empirical mean squared residual of the best predictor of
// `node` supported on `s` (no dof correction; this is the raw E-hat loss)
inline double subset_loss(const SymMatrix& moments, int node, const std::vector<int>& s) {
    if (s.empty()) return moments(node, node);
    SymMatrix ss = moments.submatrix(s);
    Vector si(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) si[k] = moments(s[k], node);
    Vector x;
    try {
        x = solve_spd(ss, si);
    } catch (const NotPdError&) {
        return std::numeric_limits<double>::infinity();  // collinear support, never optimal
    }
    return moments(node, node) - dot(si, x);
}

}  // namespace detail

// Exhaustive l0-constrained regression per candidate degree on split 1, then
// the nested validation loops on split 2. nu defaults to kappa^2/2 upstream.
inline NeighborhoodEstimate search_and_validate(const LearnerData& data, int i,
                                                const LearnerConfig& cfg) {
    if (cfg.nu < 0.0 || cfg.d < 0)
        throw BadParamsError("search_and_validate: need nu >= 0 and d >= 0");
    const DataView& v1 = data.s1;
    const DataView& v2 = data.s2;
    NeighborhoodEstimate est;
    est.node = i;
    if (v1.dim() <= 1) {
        detail::finalize_fit(v2, i, est);
        return est;
    }
    int d = std::min<int>(cfg.d, static_cast<int>(v1.dim()) - 1);
    if (detail::enumeration_count(v1.dim() - 1, d) > static_cast<double>(cfg.enum_budget))
        throw EnumerationBudgetError("search_and_validate: subset enumeration over budget");

    std::vector<int> universe = detail::all_but(v1.dim(), i);
    const SymMatrix& m1 = v1.moments();

    // step 2: best support of size <= d' for every d' (sizes ascending, colex
    // within a size, strict improvement keeps the earlier support)
    std::vector<std::vector<int>> best_support(d + 1);
    std::vector<double> best_loss(d + 1, std::numeric_limits<double>::infinity());
    {
        double running = std::numeric_limits<double>::infinity();
        std::vector<int> running_support;
        for (int size = 0; size <= d; ++size) {
            detail::for_each_subset(universe, size, [&](const std::vector<int>& s) {
                double loss = detail::subset_loss(m1, i, s);
                if (loss < running) {
                    running = loss;
                    running_support = s;
                }
            });
            best_loss[size] = running;
            best_support[size] = running_support;
        }
    }

    // step 3: validation on split 2
    detail::CondVarCache cv2(v2, i);
    for (int dp = 0; dp <= d; ++dp) {
        bool rejected = false;
        for (int dq = 0; dq <= d && !rejected; ++dq) {
            if (dq == dp) continue;
            std::vector<int> s_union = best_support[dp];
            for (int x : best_support[dq])
                if (std::find(s_union.begin(), s_union.end(), x) == s_union.end())
                    s_union.push_back(x);
            double var_union = cv2(s_union);
            for (int j : best_support[dq]) {
                if (std::find(best_support[dp].begin(), best_support[dp].end(), j) !=
                    best_support[dp].end())
                    continue;
                std::vector<int> without;
                for (int x : s_union)
                    if (x != j) without.push_back(x);
                if (cv2(without) - var_union > cfg.nu * var_union) {
                    rejected = true;
                    break;
                }
            }
        }
        if (!rejected) {
            est.support = best_support[dp];
            detail::finalize_fit(v2, i, est);
            return est;
        }
    }
    // no candidate degree survived; return the largest support, flagged
    est.support = best_support[d];
    est.validated = false;
    detail::finalize_fit(v2, i, est);
    return est;
}

// ---------------------------------------------------------------------------
// WS-Regression
// ---------------------------------------------------------------------------

struct WsRegressionResult {
    Vector w;                // over regressors (all nodes except i and j)
    std::vector<int> regressors;
    double a = 0.0;          // free coefficient on X_j
    int j = -1;
    double sigma_hat_sq = 0.0;
    Vector u;                // per-node predictor: u_j = a, u_k = w_k / scale_k
    bool grid_exhausted = false;
};

// Single greedy step (pick j minimizing Var-hat(X_i | X_j) on split 1), then
// an l1-constrained regression on split 2 over a log grid of radii, exiting
// at the first radius that dominates the split-3 noise estimate.
inline WsRegressionResult ws_regression(const LearnerData& data, int i,
                                        const LearnerConfig& cfg) {
    const DataView& v1 = data.s1;
    const DataView& v2 = data.s2;
    const DataView& v3 = data.s3;
    std::size_t n = v1.dim();
    WsRegressionResult out;
    if (n < 2) {
        out.sigma_hat_sq = cond_var_estimate(v3, i, {});
        out.u.assign(n, 0.0);
        return out;
    }
    bool dfree = cfg.gamma_prime > 0.0;
    if (!dfree && cfg.d < 1) throw BadParamsError("ws_regression: need d >= 1 or gamma'");
    if (!dfree && !(cfg.gamma > 0.0)) throw BadParamsError("ws_regression: need gamma > 0");

    // step 1: nearest single conditioner
    int j = -1;
    double vbest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (static_cast<int>(k) == i) continue;
        int kk = static_cast<int>(k);
        double val = cond_var_estimate(v1, i, std::span<const int>(&kk, 1));
        if (val < vbest) {
            vbest = val;
            j = kk;
        }
    }
    out.j = j;

    // rescaling denominators from split 1
    std::vector<int> regs;
    regs.reserve(n - 2);
    Vector scale;
    for (std::size_t k = 0; k < n; ++k) {
        if (static_cast<int>(k) == i || static_cast<int>(k) == j) continue;
        int kk = static_cast<int>(k);
        double cv = cond_var_estimate(v1, kk, std::span<const int>(&j, 1));
        double floor = 1e-15 * std::max(v1.moments()(kk, kk), 1e-300);
        scale.push_back(std::sqrt(std::max(cv, floor)));
        regs.push_back(kk);
    }
    out.regressors = regs;
    std::size_t kdim = regs.size() + 1;  // + free coordinate
    std::size_t free_idx = regs.size();

    // quadratic data on splits 2 and 3 in the rescaled coordinates
    auto build = [&](const DataView& v, SymMatrix& k2, Vector& c2, double& yy) {
        const SymMatrix& m = v.moments();
        k2 = SymMatrix(kdim);
        c2.assign(kdim, 0.0);
        for (std::size_t a = 0; a < regs.size(); ++a) {
            for (std::size_t b = a; b < regs.size(); ++b)
                k2.set(a, b, m(regs[a], regs[b]) / (scale[a] * scale[b]));
            k2.set(a, free_idx, m(regs[a], j) / scale[a]);
            c2[a] = m(regs[a], i) / scale[a];
        }
        k2.set(free_idx, free_idx, m(j, j));
        c2[free_idx] = m(j, i);
        yy = m(i, i);
    };
    SymMatrix k2, k3;
    Vector c2, c3;
    double yy2 = 0.0, yy3 = 0.0;
    build(v2, k2, c2, yy2);
    build(v3, k3, c3, yy3);

    // radius grid; gamma-mode follows the algorithm box, gamma'-mode folds
    // 2d into the radius so d disappears
    double lam0_sq, exit_factor;
    int steps;
    if (dfree) {
        lam0_sq = std::exp(std::floor(std::log(vbest / 4.0)) - 1.0);
        exit_factor = cfg.gamma_prime;
        steps = static_cast<int>(std::ceil(std::log(4.0 * cfg.gamma_prime) + 3.0));
    } else {
        double s0_sq = std::exp(std::floor(std::log(vbest / (8.0 * cfg.d))) - 1.0);
        lam0_sq = 2.0 * cfg.d * s0_sq;
        exit_factor = 2.0 * cfg.d * cfg.gamma * cfg.gamma;
        steps = static_cast<int>(std::ceil(std::log(8.0 * cfg.d) + 3.0));
    }
    steps = std::max(steps, 0);

    Vector warm(kdim, 0.0);
    bool solved = false;
    for (int l = 0; l <= steps; ++l) {
        double lam_sq = lam0_sq * std::exp(static_cast<double>(l));
        double radius = std::sqrt(lam_sq);
        QuadraticL1Result q = l1_ls_quadratic(k2, c2, yy2, free_idx, radius, cfg.l1_tol,
                                              cfg.l1_max_iter, &warm);
        warm = q.v;
        double sig = yy3;
        {
            Vector kv = matvec(k3, q.v);
            sig = yy3 - 2.0 * dot(c3, q.v) + dot(q.v, kv);
        }
        sig = std::max(sig, 0.0);
        out.w.assign(regs.size(), 0.0);
        for (std::size_t a = 0; a < regs.size(); ++a) out.w[a] = q.v[a];
        out.a = q.v[free_idx];
        out.sigma_hat_sq = sig;
        solved = true;
        if (lam_sq >= exit_factor * sig) break;
        if (l == steps) out.grid_exhausted = true;
    }
    if (!solved) throw NumericError("ws_regression: empty radius grid");

    out.u.assign(n, 0.0);
    for (std::size_t a = 0; a < regs.size(); ++a) out.u[regs[a]] = out.w[a] / scale[a];
    out.u[j] = out.a;
    return out;
}

// ---------------------------------------------------------------------------
// HybridMB
// ---------------------------------------------------------------------------

struct HybridResult {
    PrecisionEstimate estimate;
    std::vector<WsRegressionResult> per_node;
};

// Edge set from the bidirectional tau test plus the merged Theta-hat. At
// tau = 0 the test keeps exactly the pairs with nonzero predictor weight in
// both directions; for tau > 0 the u != 0 conjunct is implied.
inline PrecisionEstimate assemble_hybrid(const std::vector<WsRegressionResult>& per_node,
                                         double tau) {
    if (tau < 0.0) throw BadParamsError("hybrid_mb: need tau >= 0");
    std::size_t n = per_node.size();
    SymMatrix theta(n);
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        double sig = per_node[i].sigma_hat_sq;
        if (!(sig > 0.0))
            throw NumericError("hybrid_mb: nonpositive noise estimate at node " +
                               std::to_string(i));
        theta(i, i) = 1.0 / sig;
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double uab = per_node[a].u[b];
            double uba = per_node[b].u[a];
            double sa = per_node[a].sigma_hat_sq;
            double sb = per_node[b].sigma_hat_sq;
            bool fwd = uab != 0.0 && uab * uab * sb >= tau * sa;
            bool bwd = uba != 0.0 && uba * uba * sa >= tau * sb;
            if (fwd && bwd) {
                double cand_ab = -uab * theta(a, a);
                double cand_ba = -uba * theta(b, b);
                double v = (std::abs(cand_ab) <= std::abs(cand_ba)) ? cand_ab : cand_ba;
                theta.set(a, b, v);
                edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
            }
        }
    }
    return {std::move(theta), std::move(edges)};
}

// ws_regression at every node, then the bidirectional tau test. Theta-hat is
// assembled from the per-node predictors and symmetrized by the
// smaller-magnitude rule.
inline HybridResult hybrid_mb(const LearnerData& data, const LearnerConfig& cfg) {
    std::size_t n = data.s1.dim();
    HybridResult res;
    res.per_node.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            res.per_node[i] = ws_regression(data, static_cast<int>(i), cfg);
        } catch (const Error& e) {
            throw NumericError("hybrid_mb: node " + std::to_string(i) + " failed: " +
                               e.what());
        }
    }
    res.estimate = assemble_hybrid(res.per_node, cfg.tau);
    return res;
}

// ---------------------------------------------------------------------------
// Merging, symmetrization, thresholding
// ---------------------------------------------------------------------------

enum class MergeRule { intersection, union_ };

inline PrecisionEstimate merge_and_symmetrize(const std::vector<NeighborhoodEstimate>& nbhds,
                                              MergeRule rule = MergeRule::intersection) {
    std::size_t n = nbhds.size();
    std::vector<char> seen(n, 0);
    for (const auto& e : nbhds) {
        if (e.node < 0 || static_cast<std::size_t>(e.node) >= n || seen[e.node])
            throw MissingNodeError("merge_and_symmetrize: need exactly one estimate per node");
        seen[e.node] = 1;
    }
    std::vector<const NeighborhoodEstimate*> by_node(n);
    for (const auto& e : nbhds) by_node[e.node] = &e;

    auto coeff_of = [&](int i, int j) -> std::optional<double> {
        const auto& e = *by_node[i];
        for (std::size_t k = 0; k < e.support.size(); ++k)
            if (e.support[k] == j) return e.coefficients[k];
        return std::nullopt;
    };

    SymMatrix theta(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(by_node[i]->sigma_hat_sq > 0.0))
            throw NumericError("merge_and_symmetrize: nonpositive sigma_hat_sq");
        theta(i, i) = 1.0 / by_node[i]->sigma_hat_sq;
    }
    std::vector<std::pair<int, int>> edges;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            auto wab = coeff_of(static_cast<int>(a), static_cast<int>(b));
            auto wba = coeff_of(static_cast<int>(b), static_cast<int>(a));
            bool present = (rule == MergeRule::intersection)
                               ? (wab.has_value() && wba.has_value())
                               : (wab.has_value() || wba.has_value());
            if (!present) continue;
            std::optional<double> cand_ab, cand_ba;
            if (wab) cand_ab = -*wab * theta(a, a);
            if (wba) cand_ba = -*wba * theta(b, b);
            double v;
            if (cand_ab && cand_ba)
                v = (std::abs(*cand_ab) <= std::abs(*cand_ba)) ? *cand_ab : *cand_ba;
            else
                v = cand_ab ? *cand_ab : *cand_ba;
            if (v != 0.0) {
                theta.set(a, b, v);
                edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
            }
        }
    }
    return {std::move(theta), std::move(edges)};
}

// Edges passing |Theta-hat_ij| / sqrt(Theta-hat_ii Theta-hat_jj) > kappa/2
// (strict at the boundary).
inline std::vector<std::pair<int, int>> threshold_edges(const PrecisionEstimate& est,
                                                        double kappa) {
    const SymMatrix& t = est.theta_hat;
    for (std::size_t i = 0; i < t.n(); ++i)
        if (!(t(i, i) > 0.0)) throw ZeroDiagonalError("threshold_edges: nonpositive diagonal");
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < t.n(); ++i)
        for (std::size_t j = i + 1; j < t.n(); ++j)
            if (std::abs(t(i, j)) / std::sqrt(t(i, i) * t(j, j)) > kappa / 2.0)
                out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

}  // namespace ggmlearn
