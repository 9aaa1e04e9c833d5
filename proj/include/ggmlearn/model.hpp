#pragma once

// GGM model type and the structural machinery around it: class predicates
// (attractive / SDD / walk-summable), the SDD rescaling, the lifted-graph
// Laplacian, effective resistances, and exact conditional moments (the
// population oracle the estimators are tested against).

#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/matrix.hpp"
#include "ggmlearn/rng.hpp"

namespace ggmlearn {

// Edge presence rule: |Theta_ij| > 1e-12 * sqrt(Theta_ii Theta_jj).
inline constexpr double kEdgeZeroTol = 1e-12;

class GgmModel {
  public:
    // Which side was specified exactly by the constructor caller; the other
    // one is derived numerically. Only used in error reporting.
    enum class Primary { precision, covariance };

    static GgmModel from_precision(SymMatrix theta) {
        SymMatrix sigma = inverse_spd(theta);  // NotPD propagates
        return GgmModel(std::move(theta), std::move(sigma), Primary::precision);
    }

    static GgmModel from_covariance(SymMatrix sigma) {
        SymMatrix theta = inverse_spd(sigma);
        return GgmModel(std::move(theta), std::move(sigma), Primary::covariance);
    }

    std::size_t n() const { return theta_.n(); }
    const SymMatrix& theta() const { return theta_; }
    const SymMatrix& sigma() const { return sigma_; }
    Primary primary() const { return primary_; }

    bool has_edge(int i, int j) const {
        if (i == j) return false;
        return std::abs(theta_(i, j)) >
               kEdgeZeroTol * std::sqrt(theta_(i, i) * theta_(j, j));
    }

    const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> e;
        for (std::size_t i = 0; i < n(); ++i)
            for (int j : neighbors_[i])
                if (j > static_cast<int>(i)) e.emplace_back(static_cast<int>(i), j);
        return e;
    }

    std::optional<double> kappa() const { return kappa_; }
    int max_degree() const { return max_degree_; }

  private:
    GgmModel(SymMatrix theta, SymMatrix sigma, Primary primary)
        : theta_(std::move(theta)), sigma_(std::move(sigma)), primary_(primary) {
        check_inverse_pair();
        neighbors_.resize(n());
        double kmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n(); ++i) {
            for (std::size_t j = 0; j < n(); ++j) {
                if (i == j || !has_edge(static_cast<int>(i), static_cast<int>(j))) continue;
                neighbors_[i].push_back(static_cast<int>(j));
                kmin = std::min(kmin, std::abs(theta_(i, j)) /
                                          std::sqrt(theta_(i, i) * theta_(j, j)));
            }
            max_degree_ = std::max(max_degree_, static_cast<int>(neighbors_[i].size()));
        }
        if (std::isfinite(kmin)) kappa_ = kmin;
    }

    void check_inverse_pair() const {
        // Theta * Sigma = I within 1e-8 relative
        std::size_t nn = n();
        double scale = theta_.max_abs() * sigma_.max_abs();
        for (std::size_t i = 0; i < nn; ++i)
            for (std::size_t j = 0; j < nn; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < nn; ++k) s += theta_(i, k) * sigma_(k, j);
                double target = (i == j) ? 1.0 : 0.0;
                if (std::abs(s - target) > 1e-8 * std::max(1.0, scale))
                    throw NumericError("GgmModel: Theta * Sigma deviates from identity");
            }
    }

    SymMatrix theta_, sigma_;
    Primary primary_;
    std::vector<std::vector<int>> neighbors_;
    std::optional<double> kappa_;
    int max_degree_ = 0;
};

inline std::optional<double> kappa_of(const GgmModel& m) { return m.kappa(); }

inline bool walk_summable_check(const GgmModel& m);  // defined below with classify

inline int max_degree_of(const GgmModel& m) {
#ifndef NDEBUG
    // In walk-summable models the degree is capped by 1/kappa^2; outside
    // that class the bound can genuinely fail, so the class is checked first.
    if (m.kappa() && walk_summable_check(m)) {
        double cap = 1.0 / (*m.kappa() * *m.kappa());
        assert(static_cast<double>(m.max_degree()) <= cap * (1.0 + 1e-9) ||
               !"degree bound d <= 1/kappa^2 violated");
    }
#endif
    return m.max_degree();
}

// ---------------------------------------------------------------------------
// Class predicates
// ---------------------------------------------------------------------------

struct ModelClass {
    bool attractive = false;
    bool sdd = false;
    bool walk_summable = false;
};

inline double sdd_min_slack(const SymMatrix& a) {
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.n(); ++i) {
        double s = a(i, i);
        for (std::size_t j = 0; j < a.n(); ++j)
            if (j != i) s -= std::abs(a(i, j));
        slack = std::min(slack, s);
    }
    return slack;
}

inline bool is_sdd(const SymMatrix& a, double tol = 1e-9) {
    for (std::size_t i = 0; i < a.n(); ++i) {
        double s = a(i, i);
        for (std::size_t j = 0; j < a.n(); ++j)
            if (j != i) s -= std::abs(a(i, j));
        if (s < -tol * std::max(a(i, i), 1e-300)) return false;
    }
    return true;
}

// D - Abar for the walk-summability test: flip every off-diagonal to
// -|Theta_ij| and keep the diagonal.
inline SymMatrix sign_flipped(const SymMatrix& theta) {
    SymMatrix f(theta.n());
    for (std::size_t i = 0; i < theta.n(); ++i)
        for (std::size_t j = 0; j < theta.n(); ++j)
            f(i, j) = (i == j) ? theta(i, i) : -std::abs(theta(i, j));
    return f;
}

// Walk-summability is decided by lambda_min(D - Abar) > tol * trace(Theta);
// boundary spectra are classified non-walk-summable so the rescaling stays
// well posed.
inline ModelClass classify(const GgmModel& m, double tol = 1e-10) {
    const SymMatrix& t = m.theta();
    ModelClass c;
    c.attractive = true;
    for (std::size_t i = 0; i < t.n() && c.attractive; ++i)
        for (std::size_t j = 0; j < t.n(); ++j) {
            if (i == j) continue;
            if (t(i, j) > kEdgeZeroTol * std::sqrt(t(i, i) * t(j, j))) {
                c.attractive = false;
                break;
            }
        }
    c.sdd = is_sdd(t, tol);
    c.walk_summable = min_eigenvalue(sign_flipped(t)) > tol * t.trace();
    return c;
}

inline bool walk_summable_check(const GgmModel& m) { return classify(m).walk_summable; }

// ---------------------------------------------------------------------------
// SDD rescaling (walk-summable -> SDD by positive diagonal congruence)
// ---------------------------------------------------------------------------

// Returns d > 0 entrywise with diag(d) * Theta * diag(d) SDD. Procedure:
// normalize the diagonal to 1, take the Perron vector v of Abar, rescale by
// diag(v). v is normalized to unit 2-norm.
inline Vector sdd_rescaling(const GgmModel& m) {
    if (!classify(m).walk_summable)
        throw NotWalkSummableError("sdd_rescaling: model is not walk-summable");
    const SymMatrix& t = m.theta();
    std::size_t n = t.n();
    SymMatrix abar(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            abar(i, j) = (i == j) ? 0.0
                                  : std::abs(t(i, j)) / std::sqrt(t(i, i) * t(j, j));
    DominantEigen pe = spectral_radius_nonneg(abar, 1e-13 * std::max(1.0, abar.max_abs()) * n,
                                              200000);
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::max(pe.vector[i], 1e-300);  // strictly positive output
        d[i] = v / std::sqrt(t(i, i));
    }
    // postcondition: the rescaled matrix passes the SDD predicate
    SymMatrix rescaled(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rescaled(i, j) = d[i] * t(i, j) * d[j];
    if (!is_sdd(rescaled, 1e-9))
        throw NumericError("sdd_rescaling: rescaled matrix failed the SDD check");
    return d;
}

inline SymMatrix apply_diagonal_congruence(const SymMatrix& a, const Vector& d) {
    SymMatrix out(a.n());
    for (std::size_t i = 0; i < a.n(); ++i)
        for (std::size_t j = 0; j < a.n(); ++j) out(i, j) = d[i] * a(i, j) * d[j];
    return out;
}

// ---------------------------------------------------------------------------
// Lifted Laplacian of an SDD matrix
// ---------------------------------------------------------------------------

// Theta = L - P with L carrying the diagonal and nonpositive off-diagonals
// and P the (negated) positive off-diagonals; the lift [[L, P], [P, L]] is a
// generalized Laplacian of size 2n mapping [x; -x] to [Theta x; -Theta x].
struct LiftedLaplacian {
    SymMatrix m;  // 2n x 2n

    std::size_t base_n() const { return m.n() / 2; }
    // node i of the base graph -> vertices (i, i + n) of the lift
    int plus(int i) const { return i; }
    int minus(int i) const { return i + static_cast<int>(base_n()); }
};

inline LiftedLaplacian lift_laplacian(const SymMatrix& theta_sdd) {
    if (!is_sdd(theta_sdd)) throw NotSddError("lift_laplacian: input is not SDD");
    std::size_t n = theta_sdd.n();
    SymMatrix m(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = theta_sdd(i, i);
        m(i + n, i + n) = theta_sdd(i, i);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double v = theta_sdd(i, j);
            if (v <= 0.0) {
                m(i, j) = v;
                m(i + n, j + n) = v;
            } else {
                m(i, j + n) = -v;
                m(i + n, j) = -v;
            }
        }
    }
    return {std::move(m)};
}

// ---------------------------------------------------------------------------
// Effective resistance
// ---------------------------------------------------------------------------

inline double effective_resistance(const SymMatrix& lap, int i, int j,
                                   double rank_tol = 1e-10) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= lap.n() ||
        static_cast<std::size_t>(j) >= lap.n())
        throw IndexOutOfRangeError("effective_resistance: node index out of range");
    if (i == j) return 0.0;
    SymMatrix pinv = pseudo_inverse(lap, rank_tol);
    return pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j);
}

// ---------------------------------------------------------------------------
// Exact conditional moments (population oracle)
// ---------------------------------------------------------------------------

// Var(X_i | X_S) = Sigma_ii - Sigma_iS Sigma_SS^{-1} Sigma_Si, computed on
// the covariance side.
inline double conditional_variance(const GgmModel& m, int i, std::span<const int> s) {
    const SymMatrix& sig = m.sigma();
    if (i < 0 || static_cast<std::size_t>(i) >= m.n())
        throw IndexOutOfRangeError("conditional_variance: node out of range");
    for (int k : s)
        if (k == i) throw BadParamsError("conditional_variance: i in conditioning set");
    if (s.empty()) return sig(i, i);
    SymMatrix ss = sig.submatrix(s);
    Vector si(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) si[k] = sig(s[k], i);
    Vector x;
    try {
        x = solve_spd(ss, si);
    } catch (const NotPdError&) {
        throw SingularSubmatrixError("conditional_variance: conditioning block not SPD");
    }
    return sig(i, i) - dot(si, x);
}

// w with E[X_i | X_S] = w . X_S under the mean-zero convention.
inline Vector conditional_coefficients(const GgmModel& m, int i, std::span<const int> s) {
    const SymMatrix& sig = m.sigma();
    for (int k : s)
        if (k == i) throw BadParamsError("conditional_coefficients: i in conditioning set");
    if (s.empty()) return {};
    SymMatrix ss = sig.submatrix(s);
    Vector si(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) si[k] = sig(s[k], i);
    try {
        return solve_spd(ss, si);
    } catch (const NotPdError&) {
        throw SingularSubmatrixError("conditional_coefficients: conditioning block not SPD");
    }
}

// Cov(X_a, X_b | X_S)
inline double conditional_covariance(const GgmModel& m, int a, int b,
                                     std::span<const int> s) {
    const SymMatrix& sig = m.sigma();
    if (s.empty()) return sig(a, b);
    SymMatrix ss = sig.submatrix(s);
    Vector sa(s.size()), sb(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        sa[k] = sig(s[k], a);
        sb[k] = sig(s[k], b);
    }
    Vector x = solve_spd(ss, sb);
    return sig(a, b) - dot(sa, x);
}

// Model with unit diagonal precision (D1 Theta D1, D1 = diag(1/sqrt(Theta_ii))).
inline SymMatrix unit_diagonal_precision(const SymMatrix& theta) {
    Vector d(theta.n());
    for (std::size_t i = 0; i < theta.n(); ++i) d[i] = 1.0 / std::sqrt(theta(i, i));
    return apply_diagonal_congruence(theta, d);
}

// FNV hash of the precision entries at full precision; identifies a model in
// reports and sample-set provenance.
inline std::uint64_t model_hash(const GgmModel& m) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ull;
        }
    };
    mix(m.n());
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t j = 0; j < m.n(); ++j) {
            double x = m.theta()(i, j);
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(x));
            std::memcpy(&bits, &x, sizeof(bits));
            mix(bits);
        }
    return h;
}

}  // namespace ggmlearn
