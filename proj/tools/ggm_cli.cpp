// Command-line front door: generate models, draw samples, run the structure
// learners, score estimates, sweep sample complexity, and verify the
// structural inequalities a model class promises. Exit codes: 0 success,
// 2 validation error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ggmlearn/ggmlearn.hpp"

namespace gl = ggmlearn;

namespace {

struct GenOptions {
    std::string family;
    int n = 64;
    int d = 4;
    double rho = 0.95;
    int start_time = -1;
    double delta = 1e-3;
    int n_pad = 0;
    int tiles = 1;
    std::uint64_t permute_seed = 0;
    bool no_standardize = false;
    std::string name;  // counterexample
    double eps = 0.01, big_m = 100.0, c = 10.0, kappa = 0.5, r = 0.39;
    std::string out;
};

gl::GeneratorSpec to_spec(const GenOptions& o) {
    gl::GeneratorSpec spec;
    spec.family = gl::GeneratorSpec::family_from_string(o.family);
    spec.n = o.n;
    spec.d = o.d;
    spec.rho = o.rho;
    spec.start_time = o.start_time;
    spec.delta = o.delta;
    spec.n_pad = o.n_pad;
    spec.tiles = o.tiles;
    spec.permute_seed = o.permute_seed;
    spec.standardize = !o.no_standardize;
    spec.counterexample_name = o.name;
    spec.cparams.eps = o.eps;
    spec.cparams.big_m = o.big_m;
    spec.cparams.c = o.c;
    spec.cparams.kappa = o.kappa;
    spec.cparams.r = o.r;
    return spec;
}

void print_class_report(const gl::GgmModel& model) {
    gl::ModelClass cls = gl::classify(model);
    auto kappa = gl::kappa_of(model);
    std::printf("n:             %zu\n", model.n());
    std::printf("edges:         %zu\n", model.edges().size());
    std::printf("max degree:    %d\n", gl::max_degree_of(model));
    if (kappa)
        std::printf("kappa:         %.6g\n", *kappa);
    else
        std::printf("kappa:         none (no edges)\n");
    std::printf("attractive:    %s\n", cls.attractive ? "yes" : "no");
    std::printf("sdd:           %s\n", cls.sdd ? "yes" : "no");
    std::printf("walk-summable: %s\n", cls.walk_summable ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian graphical model structure learning"};
    app.require_subcommand(1);

    unsigned threads = gl::default_threads();
    app.add_option("--threads", threads, "worker threads")->envname("GGM_THREADS");

    // ---- gen ----
    GenOptions gen;
    auto* cgen = app.add_subcommand("gen", "generate a synthetic model");
    cgen->add_option("--family", gen.family,
                     "path-cliques | gaussian-walk | break-greedy | possibly-hard | "
                     "counterexample")
        ->required();
    cgen->add_option("--n", gen.n, "model size");
    cgen->add_option("--d", gen.d, "clique size / duplicate-block parameter");
    cgen->add_option("--rho", gen.rho, "clique edge strength");
    cgen->add_option("--start-time", gen.start_time,
                     "gaussian-walk observation start (default n)");
    cgen->add_option("--delta", gen.delta, "duplicate noise level");
    cgen->add_option("--n-pad", gen.n_pad, "identity padding size");
    cgen->add_option("--tiles", gen.tiles, "possibly-hard tile count");
    cgen->add_option("--permute-seed", gen.permute_seed, "possibly-hard layout seed");
    cgen->add_flag("--no-standardize", gen.no_standardize,
                   "skip rescaling coordinates to unit variance");
    cgen->add_option("--name", gen.name,
                     "counterexample: no_submodularity | no_apx_submodularity | "
                     "big_cancellation | walk_summable_r");
    cgen->add_option("--eps", gen.eps, "no_apx_submodularity epsilon");
    cgen->add_option("--M", gen.big_m, "no_apx_submodularity M");
    cgen->add_option("--C", gen.c, "big_cancellation C");
    cgen->add_option("--kappa", gen.kappa, "big_cancellation kappa");
    cgen->add_option("--r", gen.r, "walk_summable_r r");
    cgen->add_option("--out", gen.out, "output model JSON")->required();

    // ---- sample ----
    std::string smp_model, smp_out;
    std::uint64_t smp_seed = 0;
    std::size_t smp_m = 0;
    auto* csmp = app.add_subcommand("sample", "draw samples from a model");
    csmp->add_option("--model", smp_model, "model JSON")->required();
    csmp->add_option("--m", smp_m, "number of samples")->required();
    csmp->add_option("--seed", smp_seed, "sampling seed")->required();
    csmp->add_option("--out", smp_out, "output CSV")->required();

    // ---- learn ----
    std::string lrn_model, lrn_samples, lrn_algo, lrn_out, lrn_split = "single";
    std::uint64_t lrn_seed = 0;
    bool lrn_population = false, lrn_raw = false;
    double lrn_nu = -1.0, lrn_tau = -1.0, lrn_gamma = 2.0, lrn_gamma_prime = 0.0,
           lrn_kappa = 0.0;
    int lrn_t = 0, lrn_d = 0;
    auto* clrn = app.add_subcommand("learn", "run a structure learner");
    clrn->add_option("--algorithm", lrn_algo,
                     "greedy-and-prune | search-and-validate | hybrid-mb")
        ->required();
    clrn->add_option("--model", lrn_model, "model JSON (population mode or ground truth)");
    clrn->add_option("--samples", lrn_samples, "samples CSV");
    clrn->add_flag("--population", lrn_population, "use the model's exact covariance");
    clrn->add_flag("--raw", lrn_raw, "skip sample standardization");
    clrn->add_option("--seed", lrn_seed, "seed recorded in the output")->required();
    clrn->add_option("--nu", lrn_nu, "pruning/validation threshold");
    clrn->add_option("--t-steps", lrn_t, "OMP steps");
    clrn->add_option("--d", lrn_d, "degree cap");
    clrn->add_option("--tau", lrn_tau, "hybrid edge-test level");
    clrn->add_option("--gamma", lrn_gamma, "ws-regression gamma");
    clrn->add_option("--gamma-prime", lrn_gamma_prime, "d-free grid parameter");
    clrn->add_option("--kappa", lrn_kappa, "nondegeneracy level for defaults");
    clrn->add_option("--split-mode", lrn_split, "single | split");
    std::size_t lrn_budget = 2'000'000;
    clrn->add_option("--enum-budget", lrn_budget, "subset cap for search-and-validate");
    clrn->add_option("--out", lrn_out, "output result JSON")->required();

    // ---- eval ----
    std::string evl_result, evl_truth, evl_holdout, evl_out;
    bool evl_ws = false;
    auto* cevl = app.add_subcommand("eval", "score an estimate against the truth");
    cevl->add_option("--result", evl_result, "result JSON from learn")->required();
    cevl->add_option("--truth", evl_truth, "ground-truth model JSON")->required();
    cevl->add_option("--holdout", evl_holdout, "holdout CSV for the CV objective");
    cevl->add_flag("--ws-distance", evl_ws,
                   "also report the relative distance to the walk-summable set");
    cevl->add_option("--out", evl_out, "metrics JSON")->required();

    // ---- sweep ----
    GenOptions swp_gen;
    std::string swp_algo, swp_grid_file, swp_out_csv, swp_out_json;
    std::vector<int> swp_ns;
    double swp_threshold = 1.0;
    int swp_trials = 8, swp_granularity = 25, swp_m_max = 12800;
    std::uint64_t swp_seed = 0;
    auto* cswp = app.add_subcommand("sweep", "minimal-sample-count search over n");
    cswp->add_option("--family", swp_gen.family, "generator family")->required();
    cswp->add_option("--d", swp_gen.d, "generator d");
    cswp->add_option("--rho", swp_gen.rho, "generator rho");
    cswp->add_option("--start-time", swp_gen.start_time, "gaussian-walk start");
    cswp->add_option("--algorithm", swp_algo, "learner")->required();
    cswp->add_option("--grid-file", swp_grid_file, "hyperparameter grid JSON")->required();
    cswp->add_option("--ns", swp_ns, "model sizes to sweep")->required();
    cswp->add_option("--threshold", swp_threshold, "structure-error threshold");
    cswp->add_option("--trials", swp_trials, "trials per cell");
    cswp->add_option("--granularity", swp_granularity, "m lattice step");
    cswp->add_option("--m-max", swp_m_max, "give up beyond this m");
    cswp->add_option("--seed", swp_seed, "master seed")->required();
    cswp->add_option("--out-csv", swp_out_csv, "per-cell CSV")->required();
    cswp->add_option("--out-json", swp_out_json, "summary JSON")->required();

    // ---- verify ----
    std::string vfy_model;
    auto* cvfy = app.add_subcommand("verify", "structural-lemma table for a model");
    cvfy->add_option("--model", vfy_model, "model JSON")->required();

    // ---- certify ----
    std::string crt_model;
    auto* ccrt = app.add_subcommand("certify", "class report plus SDD rescaling");
    ccrt->add_option("--model", crt_model, "model JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) {
            gl::GgmModel model = to_spec(gen).build();
            gl::write_model_file(model, gen.out);
            return 0;
        }
        if (csmp->parsed()) {
            gl::GgmModel model = gl::read_model_file(smp_model);
            gl::SampleSet s = gl::sample(model, smp_m, smp_seed);
            gl::write_csv_file(s, smp_out);
            return 0;
        }
        if (clrn->parsed()) {
            gl::Algorithm algo = gl::algorithm_from_string(lrn_algo);
            std::optional<gl::GgmModel> model;
            if (!lrn_model.empty()) model = gl::read_model_file(lrn_model);
            if (lrn_population && !model)
                throw gl::BadParamsError("learn: --population requires --model");
            if (!lrn_population && lrn_samples.empty())
                throw gl::BadParamsError("learn: need --samples (or --population)");

            gl::LearnerConfig cfg;
            cfg.enum_budget = lrn_budget;
            if (lrn_kappa > 0.0)
                cfg.kappa = lrn_kappa;
            else if (model && model->kappa())
                cfg.kappa = *model->kappa();
            cfg.d = lrn_d > 0 ? lrn_d : (model ? gl::max_degree_of(*model) : 0);
            if (algo == gl::Algorithm::search_and_validate && cfg.d == 0 && !model)
                throw gl::BadParamsError(
                    "learn: search-and-validate needs --d (or --model to derive it)");
            double k2 = cfg.kappa * cfg.kappa;
            cfg.nu = lrn_nu >= 0.0 ? lrn_nu
                                   : (algo == gl::Algorithm::search_and_validate
                                          ? k2 / 2.0
                                          : k2 / std::sqrt(32.0));
            cfg.t_steps = lrn_t > 0
                              ? lrn_t
                              : (cfg.kappa > 0.0 && cfg.d > 0
                                     ? static_cast<int>(64.0 * cfg.d * std::log(4.0 / k2)) + 1
                                     : 8);
            cfg.tau = lrn_tau >= 0.0 ? lrn_tau : k2 / 8.0;
            cfg.gamma = lrn_gamma;
            cfg.gamma_prime = lrn_gamma_prime;
            cfg.split_samples = (lrn_split == "split");
            if (lrn_split != "single" && lrn_split != "split")
                throw gl::BadParamsError("learn: --split-mode must be single or split");

            gl::LearnRunRecord rec;
            rec.algorithm = gl::to_string(algo);
            rec.cfg = cfg;
            rec.seed = lrn_seed;
            rec.population = lrn_population;
            rec.standardized = !lrn_raw && !lrn_population;
            rec.split_mode = lrn_split;
            if (lrn_population) {
                gl::LearnerData data = gl::LearnerData::population(model->sigma());
                rec.output = gl::run_structure_learner(data, algo, cfg, threads);
            } else {
                gl::SampleSet s = gl::read_csv_file(lrn_samples);
                if (!lrn_raw) s = gl::standardize(s).first;
                gl::LearnerData data = gl::make_learner_data(s, algo, cfg);
                rec.output = gl::run_structure_learner(data, algo, cfg, threads);
            }
            gl::write_result_file(rec, lrn_out);
            return 0;
        }
        if (cevl->parsed()) {
            gl::ResultFile res = gl::read_result_file(evl_result);
            gl::GgmModel truth = gl::read_model_file(evl_truth);
            auto kappa = gl::kappa_of(truth);
            double serr = gl::structure_error(res.estimate, truth, kappa.value_or(0.0));
            double l1 = gl::l1_error(res.estimate, truth);
            std::optional<double> cv;
            if (!evl_holdout.empty())
                cv = gl::cv_objective(res.estimate, gl::read_csv_file(evl_holdout));
            std::optional<double> wsd;
            if (evl_ws) wsd = gl::ws_distance(res.estimate);
            gl::write_metrics_file(evl_out, serr, l1, cv, wsd);
            return 0;
        }
        if (cswp->parsed()) {
            gl::Algorithm algo = gl::algorithm_from_string(swp_algo);
            gl::LearnerConfig base;
            base.tau = 0.0;  // thresholding happens in structure_error
            std::vector<gl::NamedConfig> grid =
                gl::read_grid_file(swp_grid_file, swp_algo, base);
            gl::GeneratorSpec spec = to_spec(swp_gen);
            gl::SweepResult r =
                gl::min_samples_sweep(spec, algo, grid, swp_ns, swp_threshold, swp_trials,
                                      swp_seed, swp_granularity, swp_m_max, threads);
            std::ofstream csv(swp_out_csv, std::ios::binary);
            gl::write_sweep_csv(r, csv);
            gl::write_sweep_summary_file(r, swp_out_json);
            for (const auto& s : r.summary)
                std::printf("n=%d min_m=%d best_cfg=%s error=%.4f\n", s.n, s.min_m,
                            s.best_cfg_id.c_str(), s.best_error);
            return 0;
        }
        if (cvfy->parsed()) {
            gl::GgmModel model = gl::read_model_file(vfy_model);
            gl::StructuralReport rep = gl::verify_structural_lemmas(model);
            print_class_report(model);
            std::printf("%-32s %-11s %-6s %s\n", "lemma", "applicable", "holds", "min slack");
            for (const auto& c : rep.checks)
                std::printf("%-32s %-11s %-6s %.3e\n", c.lemma.c_str(),
                            c.applicable ? "yes" : "no", c.holds ? "pass" : "FAIL",
                            c.min_slack);
            bool ok = rep.all_applicable_hold();
            std::printf("applicable lemmas: %s\n", ok ? "all pass" : "FAILURES");
            return ok ? 0 : 3;
        }
        if (ccrt->parsed()) {
            gl::GgmModel model = gl::read_model_file(crt_model);
            print_class_report(model);
            gl::ModelClass cls = gl::classify(model);
            if (cls.walk_summable) {
                gl::Vector d = gl::sdd_rescaling(model);
                gl::SymMatrix rescaled = gl::apply_diagonal_congruence(model.theta(), d);
                std::printf("sdd rescaling diag:");
                for (double v : d) std::printf(" %.6g", v);
                std::printf("\nrescaled matrix:\n");
                for (std::size_t i = 0; i < rescaled.n(); ++i) {
                    for (std::size_t j = 0; j < rescaled.n(); ++j)
                        std::printf(" % .6f", rescaled(i, j));
                    std::printf("\n");
                }
                std::printf("rescaled sdd slack: %.3e\n", gl::sdd_min_slack(rescaled));
            } else {
                std::printf("not walk-summable: no SDD rescaling exists\n");
            }
            return 0;
        }
    } catch (const gl::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.validation() ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
