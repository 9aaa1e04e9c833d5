#pragma once

// Shared test fixtures: seeded random model families and small independent
// reference implementations the library is checked against.

#include <algorithm>
#include <cmath>
#include <vector>

#include "ggmlearn/ggmlearn.hpp"

namespace testhelp {

using namespace ggmlearn;

// Random generalized Laplacian + positive diagonal load: attractive and SDD
// by construction. Degree is capped when max_degree > 0.
inline GgmModel random_attractive(CounterRng& rng, int n, int max_degree = 0,
                                  double min_weight = 0.3, double max_weight = 1.0) {
    while (true) {
        SymMatrix theta(n);
        std::vector<int> deg(n, 0);
        // random spanning-tree-ish edges first so the graph is not trivial
        for (int i = 1; i < n; ++i) {
            int j = static_cast<int>(rng.next_below(i));
            if (max_degree > 0 && (deg[i] >= max_degree || deg[j] >= max_degree)) continue;
            double w = min_weight + (max_weight - min_weight) * rng.next_double();
            theta.set(i, j, -w);
            ++deg[i];
            ++deg[j];
        }
        // a few extra edges
        int extra = static_cast<int>(rng.next_below(n));
        for (int e = 0; e < extra; ++e) {
            int i = static_cast<int>(rng.next_below(n));
            int j = static_cast<int>(rng.next_below(n));
            if (i == j || theta(i, j) != 0.0) continue;
            if (max_degree > 0 && (deg[i] >= max_degree || deg[j] >= max_degree)) continue;
            double w = min_weight + (max_weight - min_weight) * rng.next_double();
            theta.set(i, j, -w);
            ++deg[i];
            ++deg[j];
        }
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) row += std::abs(theta(i, j));
            theta(i, i) = row + 0.1 + 0.9 * rng.next_double();
        }
        GgmModel m = GgmModel::from_precision(std::move(theta));
        if (m.kappa()) return m;  // needs at least one edge
    }
}

// Random SDD matrix with mixed off-diagonal signs.
inline GgmModel random_sdd(CounterRng& rng, int n) {
    SymMatrix theta(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (rng.next_double() < 0.45) {
                double w = 0.2 + 0.8 * rng.next_double();
                theta.set(i, j, rng.next_double() < 0.5 ? -w : w);
            }
        }
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) row += std::abs(theta(i, j));
        theta(i, i) = row + 0.1 + 0.9 * rng.next_double();
    }
    return GgmModel::from_precision(std::move(theta));
}

// Walk-summable but generally not SDD: a random diagonal congruence of a
// random SDD matrix.
inline GgmModel random_walk_summable(CounterRng& rng, int n) {
    GgmModel base = random_sdd(rng, n);
    Vector d(n);
    for (int i = 0; i < n; ++i) d[i] = std::exp(1.5 * (rng.next_double() - 0.5));
    return GgmModel::from_precision(apply_diagonal_congruence(base.theta(), d));
}

// Random SPD matrix A^T A + eps I.
inline SymMatrix random_spd(CounterRng& rng, int n, double eps = 0.05) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = 2.0 * rng.next_double() - 1.0;
    SymMatrix s(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = 0.0;
            for (int k = 0; k < n; ++k) v += a(k, i) * a(k, j);
            s.set(i, j, v + (i == j ? eps : 0.0));
        }
    return s;
}

// Reference OMP: per step, a fresh QR least-squares fit per candidate, pick
// the minimizer of the residual sum of squares (ties by lowest index).
inline std::vector<int> naive_omp_samples(const DataView& v, int target,
                                          const std::vector<int>& candidates, int t) {
    std::vector<int> chosen;
    Vector y = v.column(target);
    for (int step = 0; step < t; ++step) {
        int best = -1;
        double best_rss = 0.0;
        for (int j : candidates) {  // increasing index order; ties keep the first
            if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
            std::vector<int> s = chosen;
            s.push_back(j);
            std::sort(s.begin(), s.end());
            Matrix x = v.columns(s);
            double rss = least_squares_qr(x, y).residual_ssq;
            if (best == -1 || rss < best_rss) {
                best = j;
                best_rss = rss;
            }
        }
        chosen.push_back(best);
    }
    return chosen;
}

inline bool same_edges(std::vector<std::pair<int, int>> a,
                       std::vector<std::pair<int, int>> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

inline std::vector<int> sorted(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace testhelp
