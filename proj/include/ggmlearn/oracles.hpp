#pragma once

// Brute-force reference computations: exhaustive supermodularity checks, the
// submodularity ratio, truncated walk expansions, and a one-shot sweep over
// the structural inequalities a model class is supposed to satisfy. Used by
// the test suite and the `verify` CLI command, never by the learners.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/model.hpp"

namespace ggmlearn {

namespace detail {

// conditional variances of node i indexed by bitmask over `universe`
class MaskedCondVar {
  public:
    MaskedCondVar(const GgmModel& m, int i, std::vector<int> universe)
        : model_(&m), i_(i), universe_(std::move(universe)),
          cache_(std::size_t{1} << universe_.size(),
                 std::numeric_limits<double>::quiet_NaN()) {}

    double operator()(std::uint32_t mask) {
        double& slot = cache_[mask];
        if (std::isnan(slot)) {
            std::vector<int> s;
            for (std::size_t b = 0; b < universe_.size(); ++b)
                if (mask & (1u << b)) s.push_back(universe_[b]);
            slot = conditional_variance(*model_, i_, s);
        }
        return slot;
    }

    const std::vector<int>& universe() const { return universe_; }

  private:
    const GgmModel* model_;
    int i_;
    std::vector<int> universe_;
    std::vector<double> cache_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Supermodularity
// ---------------------------------------------------------------------------

struct SupermodularityReport {
    std::uint64_t model_hash = 0;
    double worst_violation = 0.0;  // min over triples of dec(S,j) - dec(T,j)
    std::vector<int> witness_s, witness_t;
    int witness_j = -1;
    std::size_t checked_triples = 0;
};

// Exhaustive over strict pairs S < T <= [n] \ {i} and j outside T. The margin
// [Var(S) - Var(S+j)] - [Var(T) - Var(T+j)] is nonnegative exactly when the
// conditional variance is supermodular along that triple.
inline SupermodularityReport check_supermodularity(const GgmModel& model, int i) {
    if (model.n() > 16) throw TooLargeError("check_supermodularity: n > 16");
    std::vector<int> universe;
    for (std::size_t k = 0; k < model.n(); ++k)
        if (static_cast<int>(k) != i) universe.push_back(static_cast<int>(k));
    detail::MaskedCondVar var(model, i, universe);
    std::size_t nu = universe.size();
    std::uint32_t full = (nu >= 32) ? 0xFFFFFFFFu : ((1u << nu) - 1);

    SupermodularityReport rep;
    rep.model_hash = model_hash(model);
    rep.worst_violation = std::numeric_limits<double>::infinity();
    auto unmask = [&](std::uint32_t mask) {
        std::vector<int> s;
        for (std::size_t b = 0; b < nu; ++b)
            if (mask & (1u << b)) s.push_back(universe[b]);
        return s;
    };
    for (std::size_t jb = 0; jb < nu; ++jb) {
        std::uint32_t jbit = 1u << jb;
        std::uint32_t rest = full & ~jbit;
        // T enumerates submasks of rest, S enumerates proper submasks of T
        for (std::uint32_t t = rest;; t = (t - 1) & rest) {
            if (t != 0) {
                for (std::uint32_t s = (t - 1) & t;; s = (s - 1) & t) {
                    double dec_s = var(s) - var(s | jbit);
                    double dec_t = var(t) - var(t | jbit);
                    double margin = dec_s - dec_t;
                    ++rep.checked_triples;
                    if (margin < rep.worst_violation) {
                        rep.worst_violation = margin;
                        rep.witness_s = unmask(s);
                        rep.witness_t = unmask(t);
                        rep.witness_j = universe[jb];
                    }
                    if (s == 0) break;
                }
            }
            if (t == 0) break;
        }
    }
    if (rep.checked_triples == 0) rep.worst_violation = 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Submodularity ratio
// ---------------------------------------------------------------------------

// gamma(k) of f(S) = Var(X_i) - Var(X_i | X_S): minimum over disjoint (L, S)
// with |S| <= k of sum_{x in S} [f(L+x) - f(L)] / [f(L+S) - f(L)];
// denominator-zero pairs are skipped.
inline double submodularity_ratio(const GgmModel& model, int i, int k) {
    if (model.n() > 16) throw TooLargeError("submodularity_ratio: n > 16");
    if (k < 1) throw BadParamsError("submodularity_ratio: k must be >= 1");
    std::vector<int> universe;
    for (std::size_t c = 0; c < model.n(); ++c)
        if (static_cast<int>(c) != i) universe.push_back(static_cast<int>(c));
    detail::MaskedCondVar var(model, i, universe);
    std::size_t nu = universe.size();
    std::uint32_t full = (1u << nu) - 1;
    double base = var(0);  // Var(X_i)
    auto f = [&](std::uint32_t mask) { return base - var(mask); };

    double ratio = std::numeric_limits<double>::infinity();
    for (std::uint32_t l = 0; l <= full; ++l) {
        std::uint32_t rest = full & ~l;
        for (std::uint32_t s = rest;; s = (s - 1) & rest) {
            if (s != 0 && std::popcount(s) <= k) {
                double denom = f(l | s) - f(l);
                if (std::abs(denom) > 1e-14 * std::max(1.0, std::abs(base))) {
                    double num = 0.0;
                    for (std::size_t b = 0; b < nu; ++b)
                        if (s & (1u << b)) num += f(l | (1u << b)) - f(l);
                    ratio = std::min(ratio, num / denom);
                }
            }
            if (s == 0) break;
        }
    }
    return ratio;
}

// ---------------------------------------------------------------------------
// Walk expansion
// ---------------------------------------------------------------------------

// Partial sum sum_{k<=order} A_S^k for an attractive unit-diagonal model,
// where A_S = I - Theta with the rows/columns of S removed. Converges
// entrywise upward to the conditional covariance.
inline SymMatrix walk_expansion_partial(const GgmModel& model, std::span<const int> s,
                                        int order) {
    if (order < 0) throw BadParamsError("walk_expansion_partial: order must be >= 0");
    if (!classify(model).attractive)
        throw NotAttractiveError("walk_expansion_partial: model is not attractive");
    const SymMatrix& t = model.theta();
    for (std::size_t i = 0; i < t.n(); ++i)
        if (std::abs(t(i, i) - 1.0) > 1e-9)
            throw BadParamsError("walk_expansion_partial: diagonal must be 1 (rescale first)");
    std::vector<char> drop(t.n(), 0);
    for (int k : s) {
        if (k < 0 || static_cast<std::size_t>(k) >= t.n())
            throw IndexOutOfRangeError("walk_expansion_partial: bad index in s");
        drop[k] = 1;
    }
    std::vector<int> keep;
    for (std::size_t i = 0; i < t.n(); ++i)
        if (!drop[i]) keep.push_back(static_cast<int>(i));
    std::size_t m = keep.size();
    if (m == 0) throw BadParamsError("walk_expansion_partial: conditioning out every node");

    Matrix a(m, m), acc(m, m), term(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            a(i, j) = (i == j ? 1.0 : 0.0) - t(keep[i], keep[j]);
        acc(i, i) = 1.0;
        term(i, i) = 1.0;
    }
    for (int k = 1; k <= order; ++k) {
        Matrix next(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double sum = 0.0;
                for (std::size_t l = 0; l < m; ++l) sum += term(i, l) * a(l, j);
                next(i, j) = sum;
            }
        term = std::move(next);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) acc(i, j) += term(i, j);
    }
    return SymMatrix::from_dense(acc);
}

// ---------------------------------------------------------------------------
// Structural-lemma sweep
// ---------------------------------------------------------------------------

struct LemmaCheck {
    std::string lemma;
    bool applicable = false;  // the model class the statement is proved for
    bool holds = false;       // raw inequality outcome regardless of class
    double min_slack = 0.0;
};

struct StructuralReport {
    ModelClass cls;
    std::vector<LemmaCheck> checks;

    bool all_applicable_hold() const {
        for (const auto& c : checks)
            if (c.applicable && !c.holds) return false;
        return true;
    }
    const LemmaCheck& find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.lemma == name) return c;
        throw UnknownNameError("StructuralReport: no lemma '" + name + "'");
    }
};

// Exhaustive verification of the class-conditional structural inequalities.
// Each check records its worst slack; `holds` uses -1e-9 (covariance
// nonnegativity -1e-10).
inline StructuralReport verify_structural_lemmas(const GgmModel& model) {
    if (model.n() > 16) throw TooLargeError("verify_structural_lemmas: n > 16");
    StructuralReport rep;
    rep.cls = classify(model);
    const SymMatrix& theta = model.theta();
    const SymMatrix& sigma = model.sigma();
    std::size_t n = model.n();
    auto kappa = model.kappa();
    const double inf = std::numeric_limits<double>::infinity();

    auto add = [&](std::string name, bool applicable, double slack, double tol) {
        LemmaCheck c;
        c.lemma = std::move(name);
        c.applicable = applicable;
        c.min_slack = slack;
        c.holds = slack >= -tol;
        rep.checks.push_back(std::move(c));
    };

    // kappa-variance: S missing a neighbor of i => Var(X_i|X_S) >= (1+k^2)/Theta_ii
    {
        double slack = inf;
        if (kappa) {
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<int> universe;
                for (std::size_t c = 0; c < n; ++c)
                    if (c != i) universe.push_back(static_cast<int>(c));
                detail::MaskedCondVar var(model, static_cast<int>(i), universe);
                std::uint32_t nbr_mask = 0;
                for (std::size_t b = 0; b < universe.size(); ++b)
                    if (model.has_edge(static_cast<int>(i), universe[b])) nbr_mask |= 1u << b;
                if (nbr_mask == 0) continue;  // isolated node: no constraint
                std::uint32_t full = (1u << universe.size()) - 1;
                double bound = (1.0 + *kappa * *kappa) / theta(i, i);
                for (std::uint32_t mask = 0; mask <= full; ++mask) {
                    if ((mask & nbr_mask) == nbr_mask) continue;  // covers all neighbors
                    slack = std::min(slack, var(mask) - bound);
                }
            }
        }
        add("kappa-variance", kappa.has_value(), slack == inf ? 0.0 : slack, 1e-9);
    }

    // d-bounded-by-kappa: walk-summable => d <= 1/kappa^2
    {
        double slack = 0.0;
        if (kappa) slack = 1.0 / (*kappa * *kappa) - model.max_degree();
        add("d-bounded-by-kappa", rep.cls.walk_summable && kappa.has_value(), slack, 1e-9);
    }

    // sdd-smooth-variance: Sigma_ii <= 1/|Theta_ij| + Sigma_jj per edge
    {
        double slack = inf;
        for (auto [i, j] : model.edges()) {
            double w = std::abs(theta(i, j));
            slack = std::min(slack, 1.0 / w + sigma(j, j) - sigma(i, i));
            slack = std::min(slack, 1.0 / w + sigma(i, i) - sigma(j, j));
        }
        add("sdd-smooth-variance", rep.cls.sdd, slack == inf ? 0.0 : slack, 1e-9);
    }

    // bound-after-conditioning-ij: Var(X_i|X_j) <= 1/|Theta_ij| per edge
    {
        double slack = inf;
        for (auto [i, j] : model.edges()) {
            double w = std::abs(theta(i, j));
            double vij = conditional_variance(model, i, std::span<const int>(&j, 1));
            double vji = conditional_variance(model, j, std::span<const int>(&i, 1));
            slack = std::min(slack, 1.0 / w - vij);
            slack = std::min(slack, 1.0 / w - vji);
        }
        add("bound-after-conditioning-ij", rep.cls.sdd, slack == inf ? 0.0 : slack, 1e-9);
    }

    // bound-after-conditioning: min over neighbors of Var(X_i|X_j) <= 4 deg(i)/Theta_ii
    {
        double slack = inf;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& nb = model.neighbors()[i];
            if (nb.empty()) continue;
            double best = inf;
            for (int j : nb)
                best = std::min(best,
                                conditional_variance(model, static_cast<int>(i),
                                                     std::span<const int>(&j, 1)));
            slack = std::min(slack, 4.0 * static_cast<double>(nb.size()) / theta(i, i) - best);
        }
        add("bound-after-conditioning", rep.cls.sdd, slack == inf ? 0.0 : slack, 1e-9);
    }

    // griffiths: attractive => Sigma entrywise nonnegative
    {
        double slack = inf;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) slack = std::min(slack, sigma(i, j));
        add("griffiths", rep.cls.attractive, slack, 1e-10);
    }

    // kappa-variance-ferromagnetic: Var(X_i|X_S) >= (1 + |T| kappa^2)/Theta_ii
    {
        double slack = inf;
        if (kappa) {
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<int> universe;
                for (std::size_t c = 0; c < n; ++c)
                    if (c != i) universe.push_back(static_cast<int>(c));
                detail::MaskedCondVar var(model, static_cast<int>(i), universe);
                std::uint32_t nbr_mask = 0;
                for (std::size_t b = 0; b < universe.size(); ++b)
                    if (model.has_edge(static_cast<int>(i), universe[b])) nbr_mask |= 1u << b;
                std::uint32_t full =
                    universe.empty() ? 0 : ((1u << universe.size()) - 1);
                for (std::uint32_t mask = 0; mask <= full; ++mask) {
                    int missing = std::popcount(nbr_mask & ~mask);
                    double bound = (1.0 + missing * *kappa * *kappa) / theta(i, i);
                    slack = std::min(slack, var(mask) - bound);
                    if (universe.empty()) break;
                }
            }
        }
        add("kappa-variance-ferromagnetic", rep.cls.attractive && kappa.has_value(),
            slack == inf ? 0.0 : slack, 1e-9);
    }

    return rep;
}

}  // namespace ggmlearn
