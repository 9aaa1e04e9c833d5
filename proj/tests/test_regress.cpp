#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace ggmlearn;
using testhelp::naive_omp_samples;
using testhelp::random_attractive;
using testhelp::random_spd;

namespace {

GgmModel chain3_model() {
    SymMatrix t(3);
    t(0, 0) = t(1, 1) = t(2, 2) = 2.0;
    t.set(0, 1, -1.0);
    t.set(1, 2, -1.0);
    return GgmModel::from_precision(std::move(t));
}

}  // namespace

TEST_CASE("ols") {
    // constant column
    Matrix x(3, 1);
    x(0, 0) = x(1, 0) = x(2, 0) = 1.0;
    RegressionFit f = ols(x, {1, 2, 3});
    CHECK(f.coefficients[0] == doctest::Approx(2.0));
    CHECK(f.sigma_hat_sq == doctest::Approx(1.0));  // (1+0+1)/(3-1)

    // response exactly in the span
    Matrix x2(4, 2);
    for (int i = 0; i < 4; ++i) {
        x2(i, 0) = i + 1.0;
        x2(i, 1) = (i % 2) ? 1.0 : -1.0;
    }
    Vector y(4);
    for (int i = 0; i < 4; ++i) y[i] = 2.0 * x2(i, 0) - 3.0 * x2(i, 1);
    RegressionFit f2 = ols(x2, y);
    CHECK(f2.sigma_hat_sq == doctest::Approx(0.0));
    CHECK(f2.residual_ssq == doctest::Approx(0.0));
    CHECK(f2.coefficients[0] == doctest::Approx(2.0));
    CHECK(f2.coefficients[1] == doctest::Approx(-3.0));

    // k = 0: sigma-hat^2 = ||y||^2 / m
    RegressionFit f0 = ols(Matrix(3, 0), {1, 2, 2});
    CHECK(f0.sigma_hat_sq == doctest::Approx(3.0));

    CHECK_THROWS_AS(ols(Matrix(2, 2), Vector{1, 2}), TooFewSamplesError);
}

TEST_CASE("cond_var_estimate: empty set, population agreement, sampling accuracy") {
    GgmModel chain = chain3_model();

    DataView pop = DataView::population(chain.sigma());
    std::vector<int> s{1};
    CHECK(cond_var_estimate(pop, 0, {}) == doctest::Approx(chain.sigma()(0, 0)));
    CHECK(cond_var_estimate(pop, 0, s) ==
          doctest::Approx(conditional_variance(chain, 0, s)));

    SampleSet smp = sample(chain, 500, 16);
    DataView data = DataView::from_samples(smp);
    Vector y = data.column(0);
    CHECK(cond_var_estimate(data, 0, {}) ==
          doctest::Approx(dot(y, y) / 500.0));
    double est = cond_var_estimate(data, 0, s);
    double exact = conditional_variance(chain, 0, s);
    CHECK(std::abs(est - exact) <= 0.1 * exact);
}

TEST_CASE("variance decrement statistic: two routes agree (t = F)") {
    CounterRng rng(81);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 3 + static_cast<int>(rng.next_below(4));  // up to 6 regressors + target
        GgmModel m = random_attractive(rng, n + 1);
        int mm = 12 + static_cast<int>(rng.next_below(29));
        SampleSet smp = sample(m, mm, 1000 + trial);
        DataView data = DataView::from_samples(smp);
        std::vector<int> s;
        for (int k = 1; k <= n; ++k) s.push_back(k);
        int j = s[rng.next_below(s.size())];
        double closed = variance_decrement_stat(data, 0, s, j);
        double direct = variance_decrement_direct(data, 0, s, j);
        CHECK(std::abs(closed - direct) <= 1e-8 * std::max(1.0, std::abs(direct)));
        CHECK(closed >= -1e-12);
    }
}

TEST_CASE("variance decrement: orthogonal regressor and collinearity") {
    GgmModel id = GgmModel::from_precision(identity(3));
    DataView pop = DataView::population(id.sigma());
    std::vector<int> s{1, 2};
    CHECK(variance_decrement_stat(pop, 0, s, 1) == doctest::Approx(0.0));

    // duplicated regressors: rank deficient
    SampleSet smp;
    smp.m = 6;
    smp.n = 3;
    smp.splits["all"] = {0, 6};
    CounterRng rng(5);
    smp.data.resize(18);
    for (int r = 0; r < 6; ++r) {
        double v = rng.next_gaussian();
        smp(r, 0) = rng.next_gaussian();
        smp(r, 1) = v;
        smp(r, 2) = v;  // duplicate column
    }
    DataView dup = DataView::from_samples(smp);
    std::vector<int> s2{1, 2};
    CHECK_THROWS_AS(variance_decrement_stat(dup, 0, s2, 1), RankDeficientError);
}

TEST_CASE("omp basics") {
    GgmModel chain = chain3_model();
    DataView pop = DataView::population(chain.sigma());
    std::vector<int> cand{0, 2};
    CHECK(omp(pop, 1, cand, 0).empty());

    // response equal to a single column: that column is picked first
    SampleSet smp;
    smp.m = 8;
    smp.n = 3;
    smp.splits["all"] = {0, 8};
    smp.data.resize(24);
    CounterRng rng(6);
    for (int r = 0; r < 8; ++r) {
        smp(r, 1) = rng.next_gaussian();
        smp(r, 2) = rng.next_gaussian();
        smp(r, 0) = smp(r, 2);  // target == column 2
    }
    DataView data = DataView::from_samples(smp);
    std::vector<int> cand2{1, 2};
    auto picks = omp(data, 0, cand2, 2);
    CHECK(picks[0] == 2);
}

TEST_CASE("omp stalls on the near-duplicate example") {
    GgmModel m = break_greedy(4, 0.01, 2);
    DataView pop = DataView::population(m.sigma());
    std::vector<int> cand;
    for (std::size_t k = 1; k < m.n(); ++k) cand.push_back(static_cast<int>(k));
    OmpTrace trace;
    auto picks = omp(pop, 0, cand, 2, &trace);
    CHECK(picks[0] == 4);  // Y_1, the near-duplicate
    CHECK(trace[1].decrement < 10.0 * 0.01 * 0.01);
}

TEST_CASE("omp equals the per-candidate least-squares reference") {
    CounterRng rng(91);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(4));
        GgmModel m = random_attractive(rng, n);
        SampleSet smp = sample(m, 30 + static_cast<int>(rng.next_below(20)), 500 + trial);
        DataView data = DataView::from_samples(smp);
        std::vector<int> cand;
        for (int k = 1; k < n; ++k) cand.push_back(k);
        int t = 2 + static_cast<int>(rng.next_below(cand.size() - 1));
        auto fast = omp(data, 0, cand, t);
        auto naive = naive_omp_samples(data, 0, cand, t);
        CHECK(fast == naive);
    }
}

TEST_CASE("l1 constrained least squares") {
    CounterRng rng(101);
    // radius 0: w = 0, free coefficient = OLS on the free column alone
    {
        int mm = 40;
        Matrix x(mm, 3);
        Vector y(mm);
        for (int r = 0; r < mm; ++r) {
            for (int c = 0; c < 3; ++c) x(r, c) = rng.next_gaussian();
            y[r] = 1.5 * x(r, 2) + 0.1 * rng.next_gaussian();
        }
        RegressionFit f = l1_constrained_ls(x, y, 2, 0.0);
        CHECK(f.coefficients[0] == doctest::Approx(0.0));
        CHECK(f.coefficients[1] == doctest::Approx(0.0));
        Matrix xf(mm, 1);
        for (int r = 0; r < mm; ++r) xf(r, 0) = x(r, 2);
        RegressionFit ref = ols(xf, y);
        CHECK(f.coefficients[2] == doctest::Approx(ref.coefficients[0]).epsilon(1e-6));
    }
    // inactive constraint: matches unconstrained OLS
    {
        int mm = 60;
        Matrix x(mm, 2);
        Vector y(mm);
        for (int r = 0; r < mm; ++r) {
            x(r, 0) = rng.next_gaussian();
            x(r, 1) = rng.next_gaussian();
            y[r] = 0.7 * x(r, 0) - 0.4 * x(r, 1) + 0.05 * rng.next_gaussian();
        }
        RegressionFit ref = ols(x, y);
        double l1 = std::abs(ref.coefficients[0]) + std::abs(ref.coefficients[1]);
        RegressionFit f = l1_constrained_ls(x, y, std::nullopt, l1 * 2.0);
        CHECK(f.coefficients[0] == doctest::Approx(ref.coefficients[0]).epsilon(1e-5));
        CHECK(f.coefficients[1] == doctest::Approx(ref.coefficients[1]).epsilon(1e-5));
    }
    // active constraint: matches a grid search over the l1-ball boundary
    {
        int mm = 80;
        Matrix x(mm, 2);
        Vector y(mm);
        for (int r = 0; r < mm; ++r) {
            x(r, 0) = rng.next_gaussian();
            x(r, 1) = 0.6 * x(r, 0) + 0.8 * rng.next_gaussian();
            y[r] = 1.0 * x(r, 0) + 1.0 * x(r, 1) + 0.1 * rng.next_gaussian();
        }
        double radius = 0.8;  // well inside ||w_ols||_1
        RegressionFit f = l1_constrained_ls(x, y, std::nullopt, radius);
        CHECK(std::abs(f.coefficients[0]) + std::abs(f.coefficients[1]) <=
              radius * (1.0 + 1e-8));
        auto objective = [&](double w0, double w1) {
            double s = 0.0;
            for (int r = 0; r < mm; ++r) {
                double e = y[r] - w0 * x(r, 0) - w1 * x(r, 1);
                s += e * e;
            }
            return s / mm;
        };
        double best = std::numeric_limits<double>::infinity();
        double bw0 = 0, bw1 = 0;
        for (int sign0 : {-1, 1})
            for (int sign1 : {-1, 1})
                for (int g = 0; g <= 20000; ++g) {
                    double a = radius * g / 20000.0;
                    double v = objective(sign0 * a, sign1 * (radius - a));
                    if (v < best) {
                        best = v;
                        bw0 = sign0 * a;
                        bw1 = sign1 * (radius - a);
                    }
                }
        CHECK(f.coefficients[0] == doctest::Approx(bw0).epsilon(1e-4));
        CHECK(f.coefficients[1] == doctest::Approx(bw1).epsilon(1e-4));
        CHECK(objective(f.coefficients[0], f.coefficients[1]) <= best + 1e-6);
    }
}

TEST_CASE("sigma-hat^2 sampling distribution sanity") {
    // identity model, m = 200, k = 5: mean of sigma-hat^2 over 500 replicates
    // within 3 standard errors of 1 ((m-k) s^2 / s^2 ~ chi^2_{m-k})
    GgmModel id = GgmModel::from_precision(identity(6));
    int mm = 200, k = 5, reps = 500;
    double acc = 0.0;
    std::vector<int> s{1, 2, 3, 4, 5};
    for (int r = 0; r < reps; ++r) {
        SampleSet smp = sample(id, mm, 9000 + r);
        DataView data = DataView::from_samples(smp);
        acc += cond_var_estimate(data, 0, s);
    }
    double mean = acc / reps;
    double se = std::sqrt(2.0 / (mm - k)) / std::sqrt(static_cast<double>(reps));
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("hybrid greedy step contraction in population mode") {
    // on walk-summable models the best single addition contracts the
    // conditional variance of the target's conditional mean by at least
    // V/(RW)^2, with W the l1 norm of the true coefficients and R the
    // largest single-conditioned standard deviation
    CounterRng rng(111);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 5 + static_cast<int>(rng.next_below(4));
        GgmModel m = testhelp::random_walk_summable(rng, n);
        int i = static_cast<int>(rng.next_below(n));
        // Z = the best single conditioner, as in the ws-regression first step
        int j = -1;
        double vbest = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            double v = conditional_variance(m, i, std::span<const int>(&k, 1));
            if (v < vbest) {
                vbest = v;
                j = k;
            }
        }
        std::vector<int> rest;  // everything but i
        for (int k = 0; k < n; ++k)
            if (k != i) rest.push_back(k);
        Vector wall = conditional_coefficients(m, i, rest);
        double w_l1 = 0.0, r_max = 0.0;
        for (std::size_t a = 0; a < rest.size(); ++a) {
            if (rest[a] == j) continue;  // the free coordinate is not budgeted
            w_l1 += std::abs(wall[a]);
            double cv = conditional_variance(m, rest[a], std::span<const int>(&j, 1));
            r_max = std::max(r_max, std::sqrt(cv));
        }
        double rw = w_l1 * r_max;
        std::vector<int> zj{j};
        double v0 = conditional_variance(m, i, zj) - 1.0 / m.theta()(i, i);
        if (v0 <= 1e-12 || rw <= 1e-12) continue;
        double best_after = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
            if (k == i || k == j) continue;
            std::vector<int> s{j, k};
            best_after = std::min(best_after,
                                  conditional_variance(m, i, s) - 1.0 / m.theta()(i, i));
        }
        CHECK(best_after <= v0 * (1.0 - v0 / (rw * rw)) + 1e-9);
    }
}

TEST_CASE("population omp on attractive models makes supermodular progress") {
    CounterRng rng(121);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 5 + static_cast<int>(rng.next_below(4));
        GgmModel m = random_attractive(rng, n);
        DataView pop = DataView::population(m.sigma());
        int i = static_cast<int>(rng.next_below(n));
        std::vector<int> cand;
        for (int k = 0; k < n; ++k)
            if (k != i) cand.push_back(k);
        OmpTrace trace;
        omp(pop, i, cand, static_cast<int>(cand.size()), &trace);
        std::vector<int> s;
        double inv_theta = 1.0 / m.theta()(i, i);
        for (const auto& step : trace) {
            double var_before = conditional_variance(m, i, s);
            std::vector<int> missing;
            for (int nb : m.neighbors()[i])
                if (std::find(s.begin(), s.end(), nb) == s.end()) missing.push_back(nb);
            if (!missing.empty()) {
                double need = (var_before - inv_theta) / missing.size();
                CHECK(step.decrement >= need - 1e-9);
            }
            s.push_back(step.picked);
        }
    }
}

TEST_CASE("l1 solver on an underdetermined design") {
    CounterRng rng(131);
    int mm = 10, k = 25;  // more regressors than rows: singular Gram
    Matrix x(mm, k);
    Vector y(mm);
    for (int r = 0; r < mm; ++r) {
        for (int c = 0; c < k; ++c) x(r, c) = rng.next_gaussian();
        y[r] = x(r, 0) - 0.5 * x(r, 3) + 0.05 * rng.next_gaussian();
    }
    RegressionFit f = l1_constrained_ls(x, y, std::nullopt, 2.0);
    double l1 = 0.0;
    for (double w : f.coefficients) l1 += std::abs(w);
    CHECK(l1 <= 2.0 * (1.0 + 1e-8));
    // beats the zero predictor
    double yy = dot(y, y) / mm;
    CHECK(f.residual_ssq / mm <= yy + 1e-12);
}

TEST_CASE("variance decrement routes agree in population mode too") {
    CounterRng rng(151);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(4));
        GgmModel m = testhelp::random_walk_summable(rng, n);
        DataView pop = DataView::population(m.sigma());
        std::vector<int> s;
        for (int k = 1; k < n; ++k) s.push_back(k);
        int j = s[rng.next_below(s.size())];
        double closed = variance_decrement_stat(pop, 0, s, j);
        double direct = variance_decrement_direct(pop, 0, s, j);
        CHECK(std::abs(closed - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("l1 ball projection: soft-threshold structure and optimality") {
    CounterRng rng(161);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t k = 1 + rng.next_below(8);
        Vector w(k);
        for (auto& v : w) v = 3.0 * (rng.next_double() - 0.5);
        double radius = 0.1 + 2.0 * rng.next_double();
        std::optional<std::size_t> skip;
        if (k > 1 && rng.next_double() < 0.5) skip = rng.next_below(k);

        Vector x = w;
        project_l1_ball(x, radius, skip);

        double l1_before = 0.0, l1_after = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (skip && i == *skip) {
                CHECK(x[i] == w[i]);  // the free coordinate is untouched
                continue;
            }
            l1_before += std::abs(w[i]);
            l1_after += std::abs(x[i]);
        }
        CHECK(l1_after <= radius * (1.0 + 1e-12) + 1e-12);
        if (l1_before <= radius) {
            CHECK(x == w);
            continue;
        }
        // soft-threshold structure: one theta explains every coordinate
        CHECK(l1_after == doctest::Approx(radius).epsilon(1e-10));
        double theta = -1.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (skip && i == *skip) continue;
            if (x[i] != 0.0) {
                CHECK(x[i] * w[i] > 0.0);  // sign preserved
                double th = std::abs(w[i]) - std::abs(x[i]);
                if (theta < 0.0)
                    theta = th;
                else
                    CHECK(th == doctest::Approx(theta).epsilon(1e-9));
            }
        }
        REQUIRE(theta >= -1e-12);
        for (std::size_t i = 0; i < k; ++i) {
            if (skip && i == *skip) continue;
            if (x[i] == 0.0) CHECK(std::abs(w[i]) <= theta + 1e-9);
        }
        // no random feasible point is closer
        double dist = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            if (!skip || i != *skip) dist += (x[i] - w[i]) * (x[i] - w[i]);
        for (int probe = 0; probe < 30; ++probe) {
            Vector y(k, 0.0);
            double budget = radius;
            for (std::size_t i = 0; i < k; ++i) {
                if (skip && i == *skip) continue;
                double take = budget * rng.next_double();
                y[i] = (rng.next_double() < 0.5 ? -1 : 1) * take;
                budget -= take;
            }
            double dy = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                if (!skip || i != *skip) dy += (y[i] - w[i]) * (y[i] - w[i]);
            CHECK(dist <= dy + 1e-9);
        }
    }
}
