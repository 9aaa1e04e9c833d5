#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"

using namespace ggmlearn;
using testhelp::random_attractive;
using testhelp::same_edges;
using testhelp::sorted;

namespace {

GgmModel chain_model(int n) {
    SymMatrix t(n);
    for (int i = 0; i < n; ++i) t(i, i) = 2.0;
    for (int i = 0; i + 1 < n; ++i) t.set(i, i + 1, -1.0);
    return GgmModel::from_precision(std::move(t));
}

std::vector<int> true_neighborhood(const GgmModel& m, int i) {
    return testhelp::sorted(m.neighbors()[i]);
}

}  // namespace

TEST_CASE("greedy_and_prune population: chain center and identity") {
    GgmModel chain = chain_model(3);
    LearnerData pop = LearnerData::population(chain.sigma());
    LearnerConfig cfg;
    cfg.kappa = chain.kappa().value();  // 1/2
    cfg.nu = cfg.kappa * cfg.kappa / std::sqrt(32.0);
    cfg.t_steps = 2;
    NeighborhoodEstimate est = greedy_and_prune(pop, 1, cfg);
    CHECK(sorted(est.support) == std::vector<int>{0, 2});
    CHECK(est.sigma_hat_sq == doctest::Approx(0.5));

    GgmModel id = GgmModel::from_precision(identity(4));
    LearnerData idpop = LearnerData::population(id.sigma());
    LearnerConfig icfg;
    icfg.nu = 0.01;
    icfg.t_steps = 2;
    for (int i = 0; i < 4; ++i) CHECK(greedy_and_prune(idpop, i, icfg).support.empty());
}

TEST_CASE("greedy_and_prune population recovers random attractive models exactly") {
    CounterRng rng(210);
    int checked = 0;
    while (checked < 12) {
        int n = 4 + static_cast<int>(rng.next_below(5));  // up to 8
        GgmModel m = random_attractive(rng, n, /*max_degree=*/3);
        double kappa = m.kappa().value();
        LearnerConfig cfg = LearnerConfig::greedy_defaults(kappa, m.max_degree());
        LearnerData pop = LearnerData::population(m.sigma());
        for (int i = 0; i < n; ++i) {
            NeighborhoodEstimate est = greedy_and_prune(pop, i, cfg);
            CHECK(sorted(est.support) == true_neighborhood(m, i));
        }
        ++checked;
    }
}

TEST_CASE("search_and_validate population: printed examples") {
    GgmModel id = GgmModel::from_precision(identity(3));
    LearnerData idpop = LearnerData::population(id.sigma());
    LearnerConfig icfg;
    icfg.d = 2;
    icfg.nu = 0.1;
    CHECK(search_and_validate(idpop, 0, icfg).support.empty());

    GgmModel ns = counterexample("no_submodularity");
    LearnerData pop = LearnerData::population(ns.sigma());
    LearnerConfig cfg = LearnerConfig::search_defaults(ns.kappa().value(), 2);
    NeighborhoodEstimate est = search_and_validate(pop, 0, cfg);
    CHECK(sorted(est.support) == std::vector<int>{1, 2});
    CHECK(est.validated);
}

TEST_CASE("search_and_validate on sampled chain data") {
    GgmModel chain = chain_model(5);
    SampleSet s = sample(chain, 2000, 3);
    LearnerData data = LearnerData::split2(s);
    LearnerConfig cfg = LearnerConfig::search_defaults(chain.kappa().value(), 2);
    NeighborhoodEstimate est = search_and_validate(data, 2, cfg);
    CHECK(sorted(est.support) == std::vector<int>{1, 3});
}

TEST_CASE("search_and_validate population recovers random attractive models") {
    CounterRng rng(220);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(4));  // up to 7
        GgmModel m = random_attractive(rng, n, /*max_degree=*/3);
        LearnerConfig cfg =
            LearnerConfig::search_defaults(m.kappa().value(), m.max_degree());
        LearnerData pop = LearnerData::population(m.sigma());
        for (int i = 0; i < n; ++i) {
            NeighborhoodEstimate est = search_and_validate(pop, i, cfg);
            CHECK(sorted(est.support) == true_neighborhood(m, i));
        }
    }
}

TEST_CASE("search_and_validate enumeration budget") {
    GgmModel m = chain_model(40);
    LearnerData pop = LearnerData::population(m.sigma());
    LearnerConfig cfg;
    cfg.d = 12;
    cfg.nu = 0.1;
    cfg.enum_budget = 10000;
    CHECK_THROWS_AS(search_and_validate(pop, 0, cfg), EnumerationBudgetError);
}

TEST_CASE("ws_regression population on the chain") {
    GgmModel chain = chain_model(3);
    LearnerData pop = LearnerData::population(chain.sigma());
    LearnerConfig cfg;
    cfg.d = chain.max_degree();
    cfg.gamma = 2.0;  // gamma^2 = 4 >= 2
    WsRegressionResult r = ws_regression(pop, 1, cfg);
    CHECK_FALSE(r.grid_exhausted);
    // sigma-hat^2 within [1/(2 Theta_ii), 2/Theta_ii]
    double theta_ii = chain.theta()(1, 1);
    CHECK(r.sigma_hat_sq * theta_ii >= 0.5);
    CHECK(r.sigma_hat_sq * theta_ii <= 2.0);
    // prediction risk of u against the exact conditional expectation
    std::vector<int> rest{0, 2};
    Vector wstar = conditional_coefficients(chain, 1, rest);
    Vector diff(2);
    diff[0] = r.u[0] - wstar[0];
    diff[1] = r.u[2] - wstar[1];
    double risk = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            risk += diff[a] * chain.sigma()(rest[a], rest[b]) * diff[b];
    CHECK(risk <= 1e-6);
}

TEST_CASE("ws_regression on an isolated node") {
    // one isolated coordinate plus a 2-chain
    SymMatrix t(3);
    t(0, 0) = 4.0;
    t(1, 1) = t(2, 2) = 2.0;
    t.set(1, 2, -1.0);
    GgmModel m = GgmModel::from_precision(std::move(t));
    LearnerData pop = LearnerData::population(m.sigma());
    LearnerConfig cfg;
    cfg.d = 1;
    WsRegressionResult r = ws_regression(pop, 0, cfg);
    for (double u : r.u) CHECK(std::abs(u) <= 1e-6);
    CHECK(r.sigma_hat_sq == doctest::Approx(m.sigma()(0, 0)).epsilon(1e-6));
}

TEST_CASE("ws_regression risk on the sampled random walk") {
    GgmModel walk = gaussian_walk(32, 32);
    // three splits of 600 rows each; the algorithm counts samples per split
    SampleSet s = sample(walk, 1800, 2);
    LearnerData data = LearnerData::split3(s);
    LearnerConfig cfg;
    cfg.d = walk.max_degree();
    cfg.gamma = 2.0;
    int i = 15;  // node 16, 1-based
    WsRegressionResult r = ws_regression(data, i, cfg);
    std::vector<int> rest;
    for (int k = 0; k < 32; ++k)
        if (k != i) rest.push_back(k);
    Vector wstar = conditional_coefficients(walk, i, rest);
    Vector diff(rest.size());
    for (std::size_t a = 0; a < rest.size(); ++a) diff[a] = r.u[rest[a]] - wstar[a];
    double risk = 0.0;
    for (std::size_t a = 0; a < rest.size(); ++a)
        for (std::size_t b = 0; b < rest.size(); ++b)
            risk += diff[a] * walk.sigma()(rest[a], rest[b]) * diff[b];
    double sigma_sq = 1.0 / walk.theta()(i, i);
    CHECK(risk <= 0.1 * sigma_sq);
}

TEST_CASE("hybrid_mb population: chain and independent blocks") {
    GgmModel chain = chain_model(4);
    LearnerData pop = LearnerData::population(chain.sigma());
    LearnerConfig cfg = LearnerConfig::hybrid_defaults(chain.kappa().value(),
                                                               chain.max_degree());
    HybridResult hr = hybrid_mb(pop, cfg);
    CHECK(same_edges(hr.estimate.edges, {{0, 1}, {1, 2}, {2, 3}}));

    // tau = 0 keeps exactly the pairs with nonzero weight in both directions
    SymMatrix two(4);
    two(0, 0) = two(1, 1) = two(2, 2) = two(3, 3) = 2.0;
    two.set(0, 1, -1.0);
    two.set(2, 3, -1.0);
    GgmModel blocks = GgmModel::from_precision(std::move(two));
    LearnerData bpop = LearnerData::population(blocks.sigma());
    LearnerConfig zcfg;
    zcfg.d = 1;
    zcfg.tau = 0.0;
    HybridResult hz = hybrid_mb(bpop, zcfg);
    CHECK(same_edges(hz.estimate.edges, {{0, 1}, {2, 3}}));
}

TEST_CASE("hybrid_mb on sampled identity data returns no edges") {
    GgmModel id = GgmModel::from_precision(identity(5));
    SampleSet s = sample(id, 1000, 31);
    LearnerData data = LearnerData::single(s);
    LearnerConfig cfg;
    cfg.d = 1;
    cfg.tau = 0.01;
    HybridResult hr = hybrid_mb(data, cfg);
    CHECK(hr.estimate.edges.empty());
}

TEST_CASE("hybrid_mb population recovers random attractive models") {
    CounterRng rng(230);
    for (int trial = 0; trial < 6; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(4));
        GgmModel m = random_attractive(rng, n, 3);
        LearnerConfig cfg =
            LearnerConfig::hybrid_defaults(m.kappa().value(), m.max_degree());
        LearnerData pop = LearnerData::population(m.sigma());
        HybridResult hr = hybrid_mb(pop, cfg);
        CHECK(same_edges(hr.estimate.edges, m.edges()));
    }
}

TEST_CASE("merge_and_symmetrize") {
    // population chain: per-node OLS coefficients reproduce Theta exactly
    GgmModel chain = chain_model(4);
    LearnerData pop = LearnerData::population(chain.sigma());
    LearnerConfig cfg;
    cfg.kappa = chain.kappa().value();
    cfg.nu = cfg.kappa * cfg.kappa / std::sqrt(32.0);
    cfg.t_steps = 3;
    std::vector<NeighborhoodEstimate> nbhds;
    for (int i = 0; i < 4; ++i) nbhds.push_back(greedy_and_prune(pop, i, cfg));
    PrecisionEstimate est = merge_and_symmetrize(nbhds);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(est.theta_hat(i, j) - chain.theta()(i, j)) <= 1e-8);
    CHECK(same_edges(est.edges, chain.edges()));

    // one-directional support: intersection drops the edge, value 0
    NeighborhoodEstimate a, b;
    a.node = 0;
    a.support = {1};
    a.coefficients = {0.4};
    a.sigma_hat_sq = 1.0;
    b.node = 1;
    b.support = {};
    b.sigma_hat_sq = 1.0;
    PrecisionEstimate dropped = merge_and_symmetrize({a, b}, MergeRule::intersection);
    CHECK(dropped.edges.empty());
    CHECK(dropped.theta_hat(0, 1) == 0.0);
    PrecisionEstimate kept = merge_and_symmetrize({a, b}, MergeRule::union_);
    CHECK(kept.edges.size() == 1);
    CHECK(kept.theta_hat(0, 1) == doctest::Approx(-0.4));

    CHECK_THROWS_AS(merge_and_symmetrize({a, a}), MissingNodeError);
}

TEST_CASE("threshold_edges") {
    GgmModel chain = chain_model(4);
    PrecisionEstimate exact{chain.theta(), chain.edges()};
    CHECK(same_edges(threshold_edges(exact, chain.kappa().value()), chain.edges()));

    PrecisionEstimate none{identity(3), {}};
    CHECK(threshold_edges(none, 0.5).empty());

    // strict boundary: ratio 0.49 kappa dropped, 0.51 kappa kept
    double kappa = 0.4;
    SymMatrix t(3);
    t(0, 0) = t(1, 1) = t(2, 2) = 1.0;
    t.set(0, 1, 0.49 * kappa);
    t.set(1, 2, 0.51 * kappa);
    PrecisionEstimate near{t, {}};
    auto kept = threshold_edges(near, kappa);
    CHECK(kept.size() == 1);
    CHECK(kept[0] == std::pair<int, int>{1, 2});

    SymMatrix bad(2);
    bad(0, 0) = 1.0;
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(threshold_edges({bad, {}}, 0.5), ZeroDiagonalError);
}

TEST_CASE("edge sets are invariant under positive diagonal rescaling (population)") {
    CounterRng rng(240);
    for (int trial = 0; trial < 5; ++trial) {
        int n = 5;
        GgmModel m = random_attractive(rng, n, 3);
        Vector d(n);
        for (auto& v : d) v = std::exp(2.0 * (rng.next_double() - 0.5));
        SymMatrix sigma_scaled(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) sigma_scaled(i, j) = d[i] * m.sigma()(i, j) * d[j];

        LearnerConfig gcfg = LearnerConfig::greedy_defaults(m.kappa().value(),
                                                                    m.max_degree());
        LearnerData pop = LearnerData::population(m.sigma());
        LearnerData pop_scaled = LearnerData::population(sigma_scaled);
        for (int i = 0; i < n; ++i)
            CHECK(sorted(greedy_and_prune(pop, i, gcfg).support) ==
                  sorted(greedy_and_prune(pop_scaled, i, gcfg).support));

        LearnerConfig hcfg = LearnerConfig::hybrid_defaults(m.kappa().value(),
                                                                    m.max_degree());
        CHECK(same_edges(hybrid_mb(pop, hcfg).estimate.edges,
                         hybrid_mb(pop_scaled, hcfg).estimate.edges));
    }
}

TEST_CASE("break_greedy: population greedy misses the neighborhood below its degree") {
    GgmModel m = break_greedy(4, 1e-3, 4);
    LearnerData pop = LearnerData::population(m.sigma());
    std::vector<int> truth = true_neighborhood(m, 0);
    CHECK(truth.size() == 7);  // the 2d-block precision is dense
    double kappa = m.kappa().value();
    for (int t = 1; t <= 6; ++t) {
        LearnerConfig cfg;
        cfg.kappa = kappa;
        cfg.nu = kappa * kappa / std::sqrt(32.0);
        cfg.t_steps = t;
        NeighborhoodEstimate est = greedy_and_prune(pop, 0, cfg);
        std::vector<int> got = sorted(est.support);
        CHECK_FALSE(std::includes(got.begin(), got.end(), truth.begin(), truth.end()));
    }
    // the first pick is the near-duplicate and the second decrement is tiny:
    // greedy stalls even though every in-block decrement stays positive
    std::vector<int> cand;
    for (std::size_t k = 1; k < m.n(); ++k) cand.push_back(static_cast<int>(k));
    OmpTrace trace;
    omp(DataView::population(m.sigma()), 0, cand, 2, &trace);
    CHECK(trace[0].picked == 4);
    CHECK(trace[1].decrement < 1e-9);

    // SearchAndValidate with the true degree cap recovers the neighborhood
    LearnerConfig scfg = LearnerConfig::search_defaults(kappa, 7);
    NeighborhoodEstimate sav = search_and_validate(pop, 0, scfg);
    CHECK(sorted(sav.support) == truth);
}

TEST_CASE("single-node models return empty supports") {
    SymMatrix t(1);
    t(0, 0) = 2.0;
    GgmModel m = GgmModel::from_precision(std::move(t));
    LearnerData pop = LearnerData::population(m.sigma());
    LearnerConfig cfg;
    cfg.t_steps = 3;
    cfg.d = 2;
    CHECK(greedy_and_prune(pop, 0, cfg).support.empty());
    CHECK(search_and_validate(pop, 0, cfg).support.empty());
    WsRegressionResult r = ws_regression(pop, 0, cfg);
    CHECK(r.j == -1);
    CHECK(r.sigma_hat_sq == doctest::Approx(0.5));
}

TEST_CASE("ws_regression flags an exhausted radius grid") {
    GgmModel chain = chain_model(3);
    LearnerData pop = LearnerData::population(chain.sigma());
    LearnerConfig cfg;
    cfg.d = 2;
    cfg.gamma = 1e6;  // the exit test can never pass
    WsRegressionResult r = ws_regression(pop, 1, cfg);
    CHECK(r.grid_exhausted);
    CHECK(r.sigma_hat_sq > 0.0);  // last iterate still returned
}

TEST_CASE("learners run on the permuted tiled hard instance") {
    GgmModel m = possibly_hard(4, 0.05, 2, 9);
    LearnerData pop = LearnerData::population(m.sigma());
    LearnerConfig cfg = LearnerConfig::greedy_defaults(m.kappa().value(), m.max_degree());
    CHECK_NOTHROW(run_structure_learner(pop, Algorithm::greedy_and_prune, cfg, 2));
}
