#pragma once

// Estimators the learners are assembled from: OLS with the unbiased noise
// estimate, conditional-variance estimation, the t=F variance-decrement
// statistic, orthogonal matching pursuit, and l1-constrained least squares
// with one unconstrained coordinate.
//
// Every operation runs against a DataView, which is either a sample split or
// an exact covariance ("population mode"). Population mode turns the
// estimators into deterministic oracles; the learner logic upstream cannot
// tell the difference.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ggmlearn/errors.hpp"
#include "ggmlearn/matrix.hpp"
#include "ggmlearn/model.hpp"
#include "ggmlearn/sampler.hpp"

namespace ggmlearn {

class DataView {
  public:
    // copies the sample set once; views made with from_samples_shared share it
    static DataView from_samples(const SampleSet& s, const std::string& split = "all") {
        return from_samples_shared(std::make_shared<const SampleSet>(s), split);
    }

    static DataView from_samples_shared(std::shared_ptr<const SampleSet> s,
                                        const std::string& split = "all") {
        DataView v;
        v.owner_ = std::move(s);
        v.samples_ = v.owner_.get();
        auto [lo, hi] = v.samples_->split_range(split);
        v.lo_ = lo;
        v.hi_ = hi;
        v.dim_ = v.samples_->n;
        v.moments_ = empirical_covariance(*v.samples_, split);
        return v;
    }

    static DataView population(const SymMatrix& sigma) {
        DataView v;
        v.dim_ = sigma.n();
        v.moments_ = sigma;
        return v;
    }

    bool is_population() const { return samples_ == nullptr; }
    std::size_t dim() const { return dim_; }
    std::size_t m() const { return is_population() ? 0 : hi_ - lo_; }

    // second moments E[X_a X_b]; empirical (1/m) sum or exact Sigma
    const SymMatrix& moments() const { return moments_; }

    Vector column(int c) const {
        require_samples("column");
        Vector v(m());
        for (std::size_t r = lo_; r < hi_; ++r) v[r - lo_] = (*samples_)(r, c);
        return v;
    }

    Matrix columns(std::span<const int> idx) const {
        require_samples("columns");
        Matrix x(m(), idx.size());
        for (std::size_t r = lo_; r < hi_; ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) x(r - lo_, c) = (*samples_)(r, idx[c]);
        return x;
    }

  private:
    void require_samples(const char* op) const {
        if (is_population())
            throw BadParamsError(std::string(op) + ": not available in population mode");
    }

    std::shared_ptr<const SampleSet> owner_;
    const SampleSet* samples_ = nullptr;
    std::size_t lo_ = 0, hi_ = 0, dim_ = 0;
    SymMatrix moments_;
};

struct RegressionFit {
    std::vector<int> support;
    Vector coefficients;
    double sigma_hat_sq = 0.0;
    double residual_ssq = 0.0;
    std::size_t m = 0;
    std::size_t k = 0;
};

// ---------------------------------------------------------------------------
// OLS
// ---------------------------------------------------------------------------

inline RegressionFit ols(const Matrix& design, const Vector& response) {
    std::size_t m = design.rows(), k = design.cols();
    if (response.size() != m) throw DimensionMismatchError("ols: size mismatch");
    if (k == 0) {
        if (m == 0) throw TooFewSamplesError("ols: empty data");
        double ssq = dot(response, response);
        RegressionFit f;
        f.m = m;
        f.sigma_hat_sq = ssq / static_cast<double>(m);
        f.residual_ssq = ssq;
        return f;
    }
    if (m <= k) throw TooFewSamplesError("ols: need m > k");
    LeastSquaresResult r = least_squares_qr(design, response);
    RegressionFit f;
    f.support.resize(k);
    for (std::size_t i = 0; i < k; ++i) f.support[i] = static_cast<int>(i);
    f.coefficients = std::move(r.coeffs);
    f.residual_ssq = r.residual_ssq;
    f.m = m;
    f.k = k;
    f.sigma_hat_sq = r.residual_ssq / static_cast<double>(m - k);
    return f;
}

// ---------------------------------------------------------------------------
// Conditional variance estimate
// ---------------------------------------------------------------------------

// Sample mode: sigma-hat^2 of the OLS fit of column i on columns s (QR, the
// unbiased (m-k) normalization; s empty gives the plain second moment).
// Population mode: the exact Schur-complement conditional variance.
inline double cond_var_estimate(const DataView& v, int i, std::span<const int> s) {
    for (int c : s)
        if (c == i) throw BadParamsError("cond_var_estimate: i in conditioning set");
    if (v.is_population()) {
        const SymMatrix& sig = v.moments();
        if (s.empty()) return sig(i, i);
        SymMatrix ss = sig.submatrix(s);
        Vector si(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) si[k] = sig(s[k], i);
        Vector x;
        try {
            x = solve_spd(ss, si);
        } catch (const NotPdError&) {
            throw RankDeficientError("cond_var_estimate: singular conditioning block");
        }
        return sig(i, i) - dot(si, x);
    }
    Vector y = v.column(i);
    if (s.empty()) return dot(y, y) / static_cast<double>(v.m());
    if (v.m() <= s.size()) throw TooFewSamplesError("cond_var_estimate: too few rows");
    Matrix x = v.columns(s);
    return ols(x, y).sigma_hat_sq;
}

// ---------------------------------------------------------------------------
// Variance-decrement statistic (t = F identity)
// ---------------------------------------------------------------------------

// Closed-form route: what the loss difference per unit sample
//   min_{supp(w) in S\{j}} E-hat[(Y - Xw)^2] - min_{supp(w) in S} E-hat[(Y - Xw)^2]
// equals: w-hat_j^2 / (Sigma-hat_{S,S}^{-1})_{jj}.
inline double variance_decrement_stat(const DataView& v, int i, std::span<const int> s,
                                      int j) {
    std::size_t jpos = s.size();
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == i) throw BadParamsError("variance_decrement_stat: i in s");
        if (s[k] == j) jpos = k;
    }
    if (jpos == s.size()) throw BadParamsError("variance_decrement_stat: j not in s");
    if (v.is_population()) {
        const SymMatrix& sig = v.moments();
        SymMatrix ss = sig.submatrix(s);
        Vector si(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) si[k] = sig(s[k], i);
        SymMatrix inv;
        try {
            inv = inverse_spd(ss);
        } catch (const NotPdError&) {
            throw RankDeficientError("variance_decrement_stat: collinear regressors");
        }
        Vector w = matvec(inv, si);
        return w[jpos] * w[jpos] / inv(jpos, jpos);
    }
    Matrix x = v.columns(s);
    Vector y = v.column(i);
    LeastSquaresResult r = least_squares_qr(x, y);
    double xtxinv_jj = xtx_inverse_diag(r.r, jpos);
    // (Sigma-hat^{-1})_jj = m * (X^T X)^{-1}_jj
    double m = static_cast<double>(v.m());
    return r.coeffs[jpos] * r.coeffs[jpos] / (m * xtxinv_jj);
}

// Direct loss-difference route. Kept separate so the two can be checked
// against each other; the closed form above is the primary implementation.
inline double variance_decrement_direct(const DataView& v, int i, std::span<const int> s,
                                        int j) {
    std::vector<int> without;
    bool found = false;
    for (int c : s) {
        if (c == j) {
            found = true;
            continue;
        }
        without.push_back(c);
    }
    if (!found) throw BadParamsError("variance_decrement_direct: j not in s");
    if (v.is_population())
        return cond_var_estimate(v, i, without) - cond_var_estimate(v, i, s);
    // uncorrected per-sample losses, matching the t=F statement
    auto loss = [&](std::span<const int> cols) {
        Vector y = v.column(i);
        if (cols.empty()) return dot(y, y) / static_cast<double>(v.m());
        Matrix x = v.columns(cols);
        return least_squares_qr(x, y).residual_ssq / static_cast<double>(v.m());
    };
    return loss(without) - loss(s);
}

// ---------------------------------------------------------------------------
// Orthogonal matching pursuit
// ---------------------------------------------------------------------------

struct OmpStep {
    int picked = -1;
    double decrement = 0.0;
    double var_after = 0.0;
};

using OmpTrace = std::vector<OmpStep>;

// Forward greedy selection on the second-moment matrix: at each step the
// candidate whose addition minimizes the (empirical or population) squared
// loss is appended; ties go to the lowest index. The conditioned moment
// matrix is maintained by rank-one updates, which reproduces the loss
// minimization exactly.
inline std::vector<int> omp(const DataView& v, int target, std::span<const int> candidates,
                            int t, OmpTrace* trace = nullptr) {
    if (t < 0) throw BadParamsError("omp: t must be >= 0");
    if (static_cast<std::size_t>(t) > candidates.size())
        throw BadParamsError("omp: t exceeds candidate count");
    for (int c : candidates)
        if (c == target) throw BadParamsError("omp: target among candidates");
    if (trace) trace->clear();
    if (t == 0) return {};

    SymMatrix c = v.moments();
    std::size_t n = c.n();
    Vector orig_diag(n);
    for (std::size_t i = 0; i < n; ++i) orig_diag[i] = c(i, i);
    std::vector<char> used(n, 0);
    std::vector<int> chosen;
    chosen.reserve(t);
    for (int step = 0; step < t; ++step) {
        int best = -1;
        double best_dec = -1.0;
        for (int j : candidates) {
            if (used[j]) continue;
            double cjj = c(j, j);
            double dec = 0.0;
            if (cjj > 1e-13 * std::max(orig_diag[j], 1e-300)) {
                double cij = c(target, j);
                dec = cij * cij / cjj;
            }
            if (dec > best_dec) {
                best_dec = dec;
                best = j;
            }
        }
        // candidates with numerically zero residual variance contribute
        // decrement 0 and can still be appended on ties
        double cjj = c(best, best);
        if (cjj > 1e-13 * std::max(orig_diag[best], 1e-300)) {
            Vector pivot(n);  // snapshot: the update overwrites this column
            for (std::size_t a = 0; a < n; ++a) pivot[a] = c(a, best);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a; b < n; ++b)
                    c.set(a, b, c(a, b) - pivot[a] * pivot[b] / cjj);
        }
        used[best] = 1;
        chosen.push_back(best);
        if (trace) trace->push_back({best, best_dec, c(target, target)});
    }
    return chosen;
}

// ---------------------------------------------------------------------------
// l1-constrained least squares
// ---------------------------------------------------------------------------

// Euclidean projection onto the l1 ball of the given radius.
inline void project_l1_ball(Vector& w, double radius, std::optional<std::size_t> skip) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!skip || i != *skip) l1 += std::abs(w[i]);
    if (l1 <= radius) return;
    std::vector<double> mags;
    mags.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!skip || i != *skip) mags.push_back(std::abs(w[i]));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        cum += mags[k];
        double th = (cum - radius) / static_cast<double>(k + 1);
        if (mags[k] - th > 0) {
            rho = k + 1;
            theta = th;
        }
    }
    if (rho == 0) theta = mags.empty() ? 0.0 : mags.front();
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (skip && i == *skip) continue;
        double mag = std::abs(w[i]) - theta;
        w[i] = (mag > 0) ? (w[i] > 0 ? mag : -mag) : 0.0;
    }
}

struct QuadraticL1Result {
    Vector v;
    double objective = 0.0;  // E-hat[(y - v.x)^2] form: yy - 2 c.v + v'Kv
    int iterations = 0;
    bool converged = false;
};

// Minimizes yy - 2 c.v + v'Kv subject to ||v without free_idx||_1 <= radius.
// Monotone FISTA with backtracking; the step comes from a power-iteration
// estimate of lambda_max(K). Objective decrease is asserted every iteration.
inline QuadraticL1Result l1_ls_quadratic(const SymMatrix& k, const Vector& c, double yy,
                                         std::optional<std::size_t> free_idx, double radius,
                                         double tol = 1e-8, int max_iter = 20000,
                                         const Vector* warm_start = nullptr) {
    if (radius < 0.0) throw BadParamsError("l1_ls_quadratic: negative radius");
    std::size_t dim = k.n();
    if (c.size() != dim) throw DimensionMismatchError("l1_ls_quadratic: size mismatch");

    double lmax = 0.0;
    {
        // crude deterministic spectral bound; backtracking fixes any slack
        Vector v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
        for (int it = 0; it < 60; ++it) {
            Vector av = matvec(k, v);
            double nv = norm2(av);
            if (nv <= 1e-300) break;
            lmax = nv;
            for (std::size_t i = 0; i < dim; ++i) v[i] = av[i] / nv;
        }
        lmax = std::max(lmax, 1e-300);
    }
    double lip = 2.0 * lmax * 1.01;

    auto objective = [&](const Vector& v) {
        double quad = 0.0, lin = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            lin += c[i] * v[i];
            double row = 0.0;
            for (std::size_t j = 0; j < dim; ++j) row += k(i, j) * v[j];
            quad += v[i] * row;
        }
        return yy - 2.0 * lin + quad;
    };
    auto gradient = [&](const Vector& v) {
        Vector g = matvec(k, v);
        for (std::size_t i = 0; i < dim; ++i) g[i] = 2.0 * (g[i] - c[i]);
        return g;
    };
    auto prox_step = [&](const Vector& v, const Vector& g, double step_lip) {
        Vector out(dim);
        for (std::size_t i = 0; i < dim; ++i) out[i] = v[i] - g[i] / step_lip;
        project_l1_ball(out, radius, free_idx);
        return out;
    };

    Vector x(dim, 0.0);
    if (warm_start && warm_start->size() == dim) x = *warm_start;
    project_l1_ball(x, radius, free_idx);
    Vector ym = x;
    double tk = 1.0;
    double fx = objective(x);
    int flat_streak = 0;

    QuadraticL1Result res;
    for (int it = 0; it < max_iter; ++it) {
        Vector g = gradient(ym);
        Vector z = prox_step(ym, g, lip);
        double fz = objective(z);
        // backtracking: the quadratic model must majorize at z
        for (int bt = 0; bt < 60; ++bt) {
            double model = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double dzi = z[i] - ym[i];
                model += g[i] * dzi + 0.5 * lip * dzi * dzi;
            }
            if (fz <= objective(ym) + model + 1e-12 * (1.0 + std::abs(fz))) break;
            lip *= 2.0;
            z = prox_step(ym, g, lip);
            fz = objective(z);
        }
        // monotone step: never accept an objective increase
        Vector xn = (fz <= fx) ? z : x;
        double fxn = std::min(fz, fx);
        assert(fxn <= fx + 1e-12 * (1.0 + std::abs(fx)));

        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        Vector ymn(dim);
        for (std::size_t i = 0; i < dim; ++i)
            ymn[i] = xn[i] + (tk / tn) * (z[i] - xn[i]) +
                     ((tk - 1.0) / tn) * (xn[i] - x[i]);

        // optimality certificate: fixed-point displacement of the prox map
        Vector gx = gradient(xn);
        Vector px = prox_step(xn, gx, lip);
        double fp = 0.0, xn_norm = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double d = xn[i] - px[i];
            fp += d * d;
            xn_norm += xn[i] * xn[i];
        }
        fp = std::sqrt(fp);

        // machine-flat objective across many iterations counts as stationary
        if (std::abs(fx - fxn) <= 1e-13 * (1.0 + std::abs(fxn)))
            ++flat_streak;
        else
            flat_streak = 0;
        x = std::move(xn);
        fx = fxn;
        ym = std::move(ymn);
        tk = tn;
        if (fp <= tol * (1.0 + std::sqrt(xn_norm)) || flat_streak >= 25) {
            res.v = x;
            res.objective = fx;
            res.iterations = it + 1;
            res.converged = true;
            return res;
        }
    }
    throw NoConvergenceError("l1_ls_quadratic: no convergence");
}

// Sample-facing wrapper: design (m x k) and response, optional unconstrained
// column, l1 radius over the remaining coefficients.
inline RegressionFit l1_constrained_ls(const Matrix& design, const Vector& response,
                                       std::optional<std::size_t> free_col, double radius,
                                       double tol = 1e-8, int max_iter = 20000) {
    std::size_t m = design.rows(), k = design.cols();
    if (response.size() != m) throw DimensionMismatchError("l1_constrained_ls: size mismatch");
    if (m < 1) throw TooFewSamplesError("l1_constrained_ls: need m >= 1");
    if (free_col && *free_col >= k) throw BadParamsError("l1_constrained_ls: bad free column");
    SymMatrix gram(std::max<std::size_t>(k, 1));
    Vector c(k, 0.0);
    double yy = dot(response, response) / static_cast<double>(m);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += design(r, a) * design(r, b);
            gram.set(a, b, s / static_cast<double>(m));
        }
        double s = 0.0;
        for (std::size_t r = 0; r < m; ++r) s += design(r, a) * response[r];
        c[a] = s / static_cast<double>(m);
    }
    if (k == 0) {
        RegressionFit f;
        f.m = m;
        f.residual_ssq = yy * static_cast<double>(m);
        f.sigma_hat_sq = yy;
        return f;
    }
    QuadraticL1Result q = l1_ls_quadratic(gram, c, yy, free_col, radius, tol, max_iter);
    RegressionFit f;
    f.support.resize(k);
    for (std::size_t i = 0; i < k; ++i) f.support[i] = static_cast<int>(i);
    f.coefficients = std::move(q.v);
    f.m = m;
    f.k = k;
    f.residual_ssq = std::max(0.0, q.objective) * static_cast<double>(m);
    f.sigma_hat_sq = (m > k) ? f.residual_ssq / static_cast<double>(m - k)
                             : std::max(0.0, q.objective);
    return f;
}

}  // namespace ggmlearn
