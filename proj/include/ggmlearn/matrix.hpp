#pragma once

// Dense symmetric linear algebra kernel. Everything downstream (models,
// estimators, oracles) is built on the handful of factorizations here.
// Tolerances are relative hybrids scaled by trace or largest eigenvalue;
// the model families this library targets are deliberately ill-conditioned,
// so no fixed absolute cutoffs.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ggmlearn/errors.hpp"

namespace ggmlearn {

using Vector = std::vector<double>;

class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    std::span<double> row(std::size_t i) { return {a_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {a_.data() + i * cols_, cols_}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    Vector a_;
};

// Symmetric n x n matrix, stored dense. Construction symmetrizes and checks
// that the asymmetry is within 1e-12 * (1 + max |entry|).
class SymMatrix {
  public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {
        if (n < 1) throw BadParamsError("SymMatrix: n must be >= 1");
    }

    static SymMatrix from_dense(const Matrix& m) {
        if (m.rows() != m.cols()) throw DimensionMismatchError("SymMatrix: not square");
        SymMatrix s(m.rows());
        double amax = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) amax = std::max(amax, std::abs(m(i, j)));
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                if (std::abs(m(i, j) - m(j, i)) > 1e-12 * (1.0 + amax))
                    throw BadParamsError("SymMatrix: input is not symmetric");
                s(i, j) = 0.5 * (m(i, j) + m(j, i));
            }
        return s;
    }

    std::size_t n() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    const double* data() const { return a_.data(); }
    double* data() { return a_.data(); }

    void set(std::size_t i, std::size_t j, double v) { a_[i * n_ + j] = a_[j * n_ + i] = v; }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    SymMatrix submatrix(std::span<const int> idx) const {
        SymMatrix s(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) s(i, j) = (*this)(idx[i], idx[j]);
        return s;
    }

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

  private:
    std::size_t n_ = 0;
    Vector a_;
};

inline SymMatrix identity(std::size_t n) {
    SymMatrix s(n);
    for (std::size_t i = 0; i < n; ++i) s(i, i) = 1.0;
    return s;
}

inline Vector matvec(const SymMatrix& a, const Vector& x) {
    Vector y(a.n(), 0.0);
    for (std::size_t i = 0; i < a.n(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.n(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double frobenius(const SymMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.n(); ++i)
        for (std::size_t j = 0; j < a.n(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

struct LowerTriangularFactor {
    Matrix l;  // lower triangular, l * l^T reproduces the input

    std::size_t n() const { return l.rows(); }

    // Solves (L L^T) x = b.
    Vector solve(const Vector& b) const {
        std::size_t n = l.rows();
        Vector y(b);
        for (std::size_t i = 0; i < n; ++i) {
            double s = y[i];
            for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * y[j];
            y[i] = s / l(i, i);
        }
        for (std::size_t k = n; k-- > 0;) {
            double s = y[k];
            for (std::size_t j = k + 1; j < n; ++j) s -= l(j, k) * y[j];
            y[k] = s / l(k, k);
        }
        return y;
    }

    double log_det() const {
        double s = 0.0;
        for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
        return 2.0 * s;
    }
};

// Pivot threshold n * 1e-14 * trace(a): a pivot at or below it means the
// matrix is not usably positive definite at working precision.
inline LowerTriangularFactor cholesky(const SymMatrix& a) {
    std::size_t n = a.n();
    double tol = static_cast<double>(n) * 1e-14 * a.trace();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > tol)) throw NotPdError("cholesky: matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return {std::move(l)};
}

inline bool is_spd(const SymMatrix& a) {
    try {
        cholesky(a);
        return true;
    } catch (const NotPdError&) {
        return false;
    }
}

inline Vector solve_spd(const SymMatrix& a, const Vector& b) {
    if (b.size() != a.n()) throw DimensionMismatchError("solve_spd: size mismatch");
    return cholesky(a).solve(b);
}

inline SymMatrix inverse_spd(const SymMatrix& a) {
    auto f = cholesky(a);
    std::size_t n = a.n();
    Matrix inv(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        Vector e(n, 0.0);
        e[c] = 1.0;
        Vector x = f.solve(e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = x[r];
    }
    return SymMatrix::from_dense(inv);
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

struct EigenSym {
    Vector values;   // ascending
    Matrix vectors;  // column k is the eigenvector for values[k]
};

inline EigenSym eigen_sym(const SymMatrix& a, int max_sweeps = 100) {
    std::size_t n = a.n();
    Matrix m(n, n), v(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        v(i, i) = 1.0;
        for (std::size_t j = 0; j < n; ++j) m(i, j) = a(i, j);
    }
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off <= 1e-30 * std::max(1.0, a.max_abs() * a.max_abs())) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double app = m(p, p), aqq = m(q, q);
                double theta = 0.5 * (aqq - app) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    // sort ascending
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return m(x, x) < m(y, y); });
    EigenSym e;
    e.values.resize(n);
    e.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        e.values[k] = m(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) e.vectors(r, k) = v(r, order[k]);
    }
    return e;
}

inline double min_eigenvalue(const SymMatrix& a) { return eigen_sym(a).values.front(); }

// Moore-Penrose pseudo-inverse through the eigendecomposition. Eigenvalues
// with |lambda| <= rank_tol * max|lambda| are treated as exact zeros.
inline SymMatrix pseudo_inverse(const SymMatrix& a, double rank_tol = 1e-12) {
    EigenSym e = eigen_sym(a);
    std::size_t n = a.n();
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    SymMatrix p(n);
    if (lmax == 0.0) return p;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(e.values[k]) <= rank_tol * lmax) continue;
        double w = 1.0 / e.values[k];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double v = p(i, j) + w * e.vectors(i, k) * e.vectors(j, k);
                p.set(i, j, v);
            }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Power iteration for entrywise-nonnegative symmetric matrices
// ---------------------------------------------------------------------------

struct DominantEigen {
    double value;
    Vector vector;  // unit 2-norm, entrywise nonnegative
};

// Deterministic: starts from the all-ones vector. Iterates on a + shift*I
// (shift = max row 1-norm) so bipartite-type spectra cannot stall the
// iteration; the reported residual is for the original matrix.
inline DominantEigen spectral_radius_nonneg(const SymMatrix& a, double tol, int max_iter) {
    std::size_t n = a.n();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (a(i, j) < 0.0) throw BadParamsError("spectral_radius_nonneg: negative entry");
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a(i, j);
        shift = std::max(shift, s);
    }
    Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector av = matvec(a, v);
        lambda = dot(v, av);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = av[i] - lambda * v[i];
            res += r * r;
        }
        if (std::sqrt(res) <= tol) {
            for (double& x : v) x = std::max(x, 0.0);
            double nv = norm2(v);
            if (nv > 0)
                for (double& x : v) x /= nv;
            return {lambda, v};
        }
        Vector w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = av[i] + shift * v[i];
        double nw = norm2(w);
        if (nw == 0.0) return {0.0, v};
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    throw NoConvergenceError("spectral_radius_nonneg: no convergence");
}

// ---------------------------------------------------------------------------
// Schur complement
// ---------------------------------------------------------------------------

// a[keep,keep] - a[keep,elim] a[elim,elim]^{-1} a[elim,keep]; the eliminated
// block must be invertible (not necessarily definite), so a pivoted LU is
// used for that block.
inline SymMatrix schur_complement(const SymMatrix& a, std::span<const int> keep) {
    std::size_t n = a.n();
    std::vector<char> in_keep(n, 0);
    for (int k : keep) {
        if (k < 0 || static_cast<std::size_t>(k) >= n)
            throw IndexOutOfRangeError("schur_complement: keep index out of range");
        if (in_keep[k]) throw BadParamsError("schur_complement: duplicate keep index");
        in_keep[k] = 1;
    }
    std::vector<int> elim;
    for (std::size_t i = 0; i < n; ++i)
        if (!in_keep[i]) elim.push_back(static_cast<int>(i));
    if (elim.empty()) return a.submatrix(keep);

    std::size_t ne = elim.size(), nk = keep.size();
    // LU with partial pivoting on the eliminated block
    Matrix lu(ne, ne);
    for (std::size_t i = 0; i < ne; ++i)
        for (std::size_t j = 0; j < ne; ++j) lu(i, j) = a(elim[i], elim[j]);
    std::vector<std::size_t> piv(ne);
    double scale = 0.0;
    for (std::size_t i = 0; i < ne; ++i)
        for (std::size_t j = 0; j < ne; ++j) scale = std::max(scale, std::abs(lu(i, j)));
    for (std::size_t c = 0; c < ne; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < ne; ++r)
            if (std::abs(lu(r, c)) > std::abs(lu(p, c))) p = r;
        if (std::abs(lu(p, c)) <= 1e-14 * std::max(scale, 1e-300))
            throw SingularBlockError("schur_complement: eliminated block is singular");
        piv[c] = p;
        if (p != c)
            for (std::size_t j = 0; j < ne; ++j) std::swap(lu(c, j), lu(p, j));
        for (std::size_t r = c + 1; r < ne; ++r) {
            lu(r, c) /= lu(c, c);
            for (std::size_t j = c + 1; j < ne; ++j) lu(r, j) -= lu(r, c) * lu(c, j);
        }
    }
    auto lu_solve = [&](Vector b) {
        for (std::size_t c = 0; c < ne; ++c) {
            if (piv[c] != c) std::swap(b[c], b[piv[c]]);
            for (std::size_t r = c + 1; r < ne; ++r) b[r] -= lu(r, c) * b[c];
        }
        for (std::size_t c = ne; c-- > 0;) {
            for (std::size_t j = c + 1; j < ne; ++j) b[c] -= lu(c, j) * b[j];
            b[c] /= lu(c, c);
        }
        return b;
    };

    Matrix x(ne, nk);  // a[elim,elim]^{-1} a[elim,keep]
    for (std::size_t c = 0; c < nk; ++c) {
        Vector b(ne);
        for (std::size_t r = 0; r < ne; ++r) b[r] = a(elim[r], keep[c]);
        Vector s = lu_solve(std::move(b));
        for (std::size_t r = 0; r < ne; ++r) x(r, c) = s[r];
    }
    Matrix out(nk, nk);
    for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
            double s = a(keep[i], keep[j]);
            for (std::size_t r = 0; r < ne; ++r) s -= a(keep[i], elim[r]) * x(r, j);
            out(i, j) = s;
        }
    // symmetrize away elimination round-off before the constructor's check
    for (std::size_t i = 0; i < nk; ++i)
        for (std::size_t j = i + 1; j < nk; ++j) {
            double v = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = out(j, i) = v;
        }
    return SymMatrix::from_dense(out);
}

// ---------------------------------------------------------------------------
// Householder QR least squares (regression backend)
// ---------------------------------------------------------------------------

struct LeastSquaresResult {
    Vector coeffs;
    double residual_ssq;
    Vector r_diag;          // diagonal of R, for rank diagnostics
    Matrix r;               // upper-triangular factor (k x k)
};

// Minimizes ||y - X w||_2. Rank tolerance: smallest |R_ii| <= 1e-10 * largest
// signals RankDeficient. m > k required.
inline LeastSquaresResult least_squares_qr(const Matrix& x, const Vector& y) {
    std::size_t m = x.rows(), k = x.cols();
    if (y.size() != m) throw DimensionMismatchError("least_squares_qr: size mismatch");
    if (m <= k) throw TooFewSamplesError("least_squares_qr: need m > k");
    if (k == 0) {
        double ssq = dot(y, y);
        return {Vector{}, ssq, Vector{}, Matrix(0, 0)};
    }
    Matrix a = x;
    Vector b = y;
    Vector rdiag(k);
    for (std::size_t c = 0; c < k; ++c) {
        double nrm = 0.0;
        for (std::size_t r = c; r < m; ++r) nrm += a(r, c) * a(r, c);
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) {
            rdiag[c] = 0.0;
            continue;
        }
        if (a(c, c) < 0) nrm = -nrm;
        for (std::size_t r = c; r < m; ++r) a(r, c) /= nrm;
        a(c, c) += 1.0;
        for (std::size_t j = c + 1; j < k; ++j) {
            double s = 0.0;
            for (std::size_t r = c; r < m; ++r) s += a(r, c) * a(r, j);
            s = -s / a(c, c);
            for (std::size_t r = c; r < m; ++r) a(r, j) += s * a(r, c);
        }
        double s = 0.0;
        for (std::size_t r = c; r < m; ++r) s += a(r, c) * b[r];
        s = -s / a(c, c);
        for (std::size_t r = c; r < m; ++r) b[r] += s * a(r, c);
        rdiag[c] = -nrm;
    }
    double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
    for (double d : rdiag) {
        rmax = std::max(rmax, std::abs(d));
        rmin = std::min(rmin, std::abs(d));
    }
    if (rmin <= 1e-10 * rmax)
        throw RankDeficientError("least_squares_qr: design matrix is rank deficient");
    Matrix rmat(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        rmat(i, i) = rdiag[i];
        for (std::size_t j = i + 1; j < k; ++j) rmat(i, j) = a(i, j);
    }
    Vector w(k);
    for (std::size_t c = k; c-- > 0;) {
        double s = b[c];
        for (std::size_t j = c + 1; j < k; ++j) s -= rmat(c, j) * w[j];
        w[c] = s / rmat(c, c);
    }
    double ssq = 0.0;
    for (std::size_t r = k; r < m; ++r) ssq += b[r] * b[r];
    return {std::move(w), ssq, std::move(rdiag), std::move(rmat)};
}

// (X^T X)^{-1}_{jj} from the R factor: the squared norm of R^{-T} e_j.
inline double xtx_inverse_diag(const Matrix& r, std::size_t j) {
    std::size_t k = r.rows();
    Vector z(k, 0.0);
    // forward solve R^T z = e_j; R^T is lower triangular
    for (std::size_t i = 0; i < k; ++i) {
        double s = (i == j) ? 1.0 : 0.0;
        for (std::size_t l = 0; l < i; ++l) s -= r(l, i) * z[l];
        z[i] = s / r(i, i);
    }
    return dot(z, z);
}

}  // namespace ggmlearn
