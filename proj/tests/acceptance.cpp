// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "compare.hpp"
#include "fixtures.hpp"
#include "manifest.hpp"
#include "test_support.hpp"
#include "wdro/dual.hpp"
#include "wdro/opl.hpp"
#include "wdro/synth.hpp"
#include "wdro/transport.hpp"

using namespace wdro;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const double kEps[] = {0.01, 0.1, 1.0, 10.0};

struct DualInstance {
    DiscreteDistribution p0;
    CostVector f;
};

std::vector<DualInstance> dual_instances() {
    Rng rng(20240601);
    std::vector<DualInstance> out;
    for (int i = 0; i < 200; ++i) {
        auto s = testing::random_support(rng, 1 + rng.uniform_index(12), i % 4 == 0 ? 2 : 1);
        auto p0 = testing::random_distribution(rng, s, 0.2);
        out.push_back({p0, testing::random_costs(rng, s)});
    }
    return out;
}

Outcome strong_duality() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& in : dual_instances())
        for (double eps : kEps) {
            auto d = wasserstein_dual_solve(in.p0, in.f, eps, GroundCost::SquaredEuclidean, default_tolerance(in.f));
            worst = std::max(worst, std::abs(primal_oracle(in.p0, in.f, eps) - d.value));
        }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && secs <= 30.0,
            fmt("200 instances x 4 radii, max |primal - dual| = %.3g (tol 1e-6), %.2f s (limit 30 s)", worst, secs)};
}

Outcome dual_bracket() {
    std::size_t violations = 0, checked = 0;
    for (const auto& in : dual_instances())
        for (double eps : kEps) {
            auto d = wasserstein_dual_solve(in.p0, in.f, eps, GroundCost::SquaredEuclidean, default_tolerance(in.f));
            ++checked;
            const bool ok = d.lambda_star >= 0.0 && d.lambda_star <= in.f.f_max / eps &&
                            d.value >= in.p0.expectation(in.f.values) && d.value <= in.f.f_max;
            if (!ok) ++violations;
        }
    return {violations == 0,
            fmt("%zu solves, %zu outside lambda in [0, f_max/eps] or E f <= value <= f_max", checked, violations)};
}

Outcome lse_sandwich() {
    Rng rng(777);
    const double etas[] = {0.1, 1.0, 10.0, 100.0};
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
        const std::size_t n = 1 + rng.uniform_index(64);
        std::vector<double> v(n);
        for (auto& x : v) x = 20.0 * rng.uniform01() - 10.0;
        const double eta = etas[i % 4];
        const double m = *std::max_element(v.begin(), v.end());
        const double l = lse(v, eta);
        worst = std::max({worst, l - m, (m - std::log(double(n)) / eta) - l});
    }
    return {worst <= 1e-12, fmt("1e4 vectors, worst violation of max - log(n)/eta <= lse <= max: %.3g (tol 1e-12)",
                                worst)};
}

Outcome smoothing_gap() {
    Rng rng(4242);
    std::size_t violations = 0;
    double worst_ratio = 0.0, worst_excess = -std::numeric_limits<double>::infinity();
    const MethodSpec exact{Method::Exact, 0.0};
    TableOptions opts;
    opts.impute_missing_ymax = true;
    for (int trial = 0; trial < 100; ++trial) {
        auto inst = fixtures::random_instance(rng, 30 + rng.uniform_index(300));
        auto pol = fixtures::random_policy(rng, inst.data.n_contexts(), inst.data.n_actions());
        auto ctx = context_distribution(inst.data);
        const double ex = 0.01 + 0.5 * rng.uniform01(), ec = 0.01 + 0.5 * rng.uniform01();
        const double v =
            evaluate_policy(pol, robust_cost_table(inst.data, inst.gen.cost_model, ec, exact, opts), ctx, ex, exact)
                .value;
        for (double eta : {10.0, 100.0}) {
            const MethodSpec reg{Method::Regularized, eta};
            const double vr =
                evaluate_policy(pol, robust_cost_table(inst.data, inst.gen.cost_model, ec, reg, opts), ctx, ex, reg)
                    .value;
            const double bound = std::log(double(inst.data.n_contexts())) / eta +
                                 std::log(double(inst.data.xi_support->size())) / eta;
            if (!(std::abs(vr - v) <= bound)) ++violations;
            worst_excess = std::max(worst_excess, std::abs(vr - v) - bound);
            if (bound > 0) worst_ratio = std::max(worst_ratio, std::abs(vr - v) / bound);
        }
    }
    return {violations == 0,
            fmt("100 instances x eta {10, 100}: %zu violations, largest gap/bound = %.6f, largest gap - bound = %.3g",
                violations, worst_ratio, worst_excess)};
}

Outcome rate_check() {
    const auto t0 = std::chrono::steady_clock::now();
    RateConfig cfg(benchmark_config(6, 5, 2, 1), uniform_policy(6, 2));
    cfg.epsilon_x = cfg.epsilon_c = 0.1;
    for (int k = 7; k <= 14; ++k) cfg.n_grid.push_back(std::size_t{1} << k);
    cfg.trials = 200;
    cfg.seed = 7;
    cfg.threads = 0;
    auto r = rate_experiment(cfg);
    const double secs = seconds_since(t0);
    return {r.slope >= -0.70 && r.slope <= -0.30 && secs <= 300.0,
            fmt("|X|=6 |Xi|=5 |A|=2, n = 2^7..2^14, 200 trials: slope %.3f (want [-0.70, -0.30]), %.1f s (limit "
                "300 s)",
                r.slope, secs)};
}

Outcome gradient_fidelity() {
    Rng rng(5151);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        auto inst = fixtures::random_opl(rng, 2 + rng.uniform_index(6), 2 + rng.uniform_index(2),
                                         1 + rng.uniform_index(2),
                                         k % 2 ? Parameterization::GroupSoftmax : Parameterization::GroupProbClamp);
        const double lambda = 0.01 + 3 * rng.uniform01(), eps = 0.2 * rng.uniform01(), eta = 1 + 30 * rng.uniform01();
        auto g = smoothed_objective(inst.params, lambda, inst.table, inst.contexts, eps, eta);
        auto fd = fixtures::fd_gradient(inst.params, lambda, inst.table, inst.contexts, eps, eta);
        auto analytic = g.grad_theta;
        analytic.push_back(g.grad_lambda);
        worst = std::max(worst, fixtures::relative_error(analytic, fd));
    }
    return {worst <= 1e-5, fmt("100 (theta, lambda) points, max relative error %.3g (tol 1e-5)", worst)};
}

Outcome bsgd_convergence() {
    auto f = fixtures::convex_fixture();
    const MethodSpec reg{Method::Regularized, f.eta};
    auto grid = exact_opl(f.table, f.contexts, f.epsilon_x, reg, f.init);
    BsgdConfig cfg;
    cfg.iterations = 20000;
    cfg.inner_batch = 64;
    cfg.step = 0.5;
    cfg.eta = f.eta;
    cfg.epsilon_x = f.epsilon_x;
    cfg.seed = 2024;
    cfg.record_trace = false;
    auto r = bsgd_learn(f.table, f.contexts, f.init, cfg);
    const double v = smoothed_objective(r.params, r.lambda, f.table, f.contexts, f.epsilon_x, f.eta).value;
    const double gap = std::abs(v - grid.value);

    // Bias of the sampled gradient against full enumeration, per inner batch size.
    Rng rng(6161);
    const std::vector<std::size_t> batches{2, 8, 32, 128};
    std::vector<std::vector<double>> gaps(batches.size());
    for (int point = 0; point < 15; ++point) {
        auto inst = fixtures::random_opl(rng, 40, 2, 4, Parameterization::GroupSoftmax);
        const double lambda = 0.5 * rng.uniform01();
        const std::size_t x = rng.uniform_index(40);
        std::vector<std::size_t> all(40);
        std::iota(all.begin(), all.end(), std::size_t{0});
        auto exact = sampled_gradient(inst.params, lambda, inst.table, inst.contexts.support(), x, all, 0.1, 8.0);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            std::vector<double> mean(inst.params.dim() + 1, 0.0);
            std::vector<std::size_t> z(batches[b]);
            const int reps = 10000;
            for (int rep = 0; rep < reps; ++rep) {
                for (auto& i : z) i = rng.uniform_index(40);
                auto s = sampled_gradient(inst.params, lambda, inst.table, inst.contexts.support(), x, z, 0.1, 8.0);
                for (std::size_t i = 0; i < s.grad_theta.size(); ++i) mean[i] += s.grad_theta[i] / reps;
                mean.back() += s.grad_lambda / reps;
            }
            double d = 0;
            for (std::size_t i = 0; i < exact.grad_theta.size(); ++i) d += std::pow(mean[i] - exact.grad_theta[i], 2);
            d += std::pow(mean.back() - exact.grad_lambda, 2);
            gaps[b].push_back(std::sqrt(d));
        }
    }
    std::vector<double> med;
    for (auto& g : gaps) {
        std::sort(g.begin(), g.end());
        med.push_back(g[g.size() / 2]);
    }
    bool monotone = true;
    for (std::size_t b = 1; b < med.size(); ++b) monotone = monotone && med[b] < med[b - 1];
    return {gap <= 1e-2 && monotone,
            fmt("|V_eta(theta_T, lambda_T) - grid| = %.2e (tol 1e-2); bias medians m=2,8,32,128: %.2e %.2e %.2e %.2e "
                "(%s)",
                gap, med[0], med[1], med[2], med[3], monotone ? "decreasing" : "not decreasing")};
}

Outcome appendix_d() {
    auto r = cli::run_compare(cli::generated_compare_spec(), {0.8, 1.0, 1.2}, 12.0);
    bool bounds = true, ordering = true;
    double ratio = std::numeric_limits<double>::infinity();
    for (const auto& row : r.rows)
        if (row.scenario == "base" && row.multiplier >= 1.0) bounds = bounds && row.value >= row.expected_q;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& kl = r.rows[6 + 2 * k];
        const auto& w = r.rows[6 + 2 * k + 1];
        ordering = ordering && *kl.delta >= 2.0 * *w.delta;
        ratio = std::min(ratio, *kl.delta / *w.delta);
    }
    return {bounds && ordering,
            fmt("E_Q f = %.3f, KL* = %.3f, W* = %.3f; values at eps >= eps*: %s; outlier delta KL/W >= %.2f (want >= 2)",
                r.expected_q, r.kl_star, r.w_star, bounds ? "all >= E_Q f" : "BELOW E_Q f", ratio)};
}

struct Call {
    int code;
    std::string out;
};

Call call(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str() + err.str()};
}

std::string last_field(const std::string& csv) {
    auto line_end = csv.find_last_not_of('\n');
    auto line_start = csv.rfind('\n', line_end);
    auto line = csv.substr(line_start + 1, line_end - line_start);
    return line.substr(line.rfind(',') + 1);
}

Outcome disjoint_support(const fs::path& dir) {
    auto s1 = std::make_shared<const SupportSet>(SupportSet::scalar(std::vector<double>{0.0, 1.0}));
    auto s2 = std::make_shared<const SupportSet>(SupportSet::scalar(std::vector<double>{0.0, 1.0, 2.0, 3.0}));
    auto p = make_distribution(s2, {0.5, 0.5, 0.0, 0.0});
    auto q = make_distribution(s2, {0.0, 0.0, 0.5, 0.5});
    const double kl = kl_divergence(q, p);
    const double w = wasserstein_distance(make_distribution(s1, {0.5, 0.5}), q).distance;

    bool radius_ok = true;
    double max_r = 0.0;
    if (call({"--seed", "3", "synth", "--contexts", "5", "--n-train", "64", "--held-out", "4", "--out",
              (dir / "syn").string()})
            .code != 0)
        radius_ok = false;
    for (int seed = 0; seed < 50 && radius_ok; ++seed) {
        auto res = call({"radius", "--data", (dir / "syn/train.json").string(), "--seed", std::to_string(seed)});
        const double v = res.code == 0 ? std::stod(last_field(res.out)) : NAN;
        radius_ok = res.code == 0 && std::isfinite(v);
        max_r = std::max(max_r, v);
    }
    return {std::isinf(kl) && std::isfinite(w) && radius_ok,
            fmt("KL(Q||P) = %g, W(P, Q) = %g; radius finite on 50 splits (max %.4g)", kl, w, max_r)};
}

Outcome manifest_replay(const fs::path& dir) {
    auto p = [&](const std::string& f) { return (dir / f).string(); };
    {
        std::ofstream(dir / "convex.csv") << "x,a,y\n0,a0,0.3\n0,a1,0.7\n0,a0,0.3\n0,a1,0.7\n1,a0,0.8\n1,a1,0.2\n";
        std::ofstream(dir / "convex.json")
            << R"({"context_columns":["x"],"action_column":"a","cost_column":"y","y_max":1})";
    }
    const std::vector<std::vector<std::string>> runs = {
        {"--seed", "11", "synth", "--contexts", "4", "--n-train", "400", "--tilt", "1", "--out", p("syn")},
        {"--seed", "12", "radius", "--data", p("syn/train.json"), "--out", p("radius.csv")},
        {"ope", "--data", p("syn/train.json"), "--method", "regularized", "--eta", "50", "--out", p("ope.csv")},
        {"--seed", "13", "opl", "--data", p("convex.csv"), "--config", p("convex.json"), "--iterations", "500",
         "--trace-out", p("trace.csv"), "--policy-out", p("policy.csv"), "--out", p("opl.csv")},
        {"opl", "--data", p("convex.csv"), "--config", p("convex.json"), "--algo", "grid", "--out", p("grid.csv")},
        {"distance", "--p", p("syn/train.json"), "--q", p("syn/test.json"), "--plan-out", p("plan.csv"), "--out",
         p("distance.csv")},
        {"compare", "--outlier-shift", "12", "--out", p("compare.csv")},
        {"--seed", "14", "--threads", "0", "rate", "--trials", "20", "--log2-n-max", "10", "--out", p("rate.csv")},
    };
    const std::vector<std::string> manifests = {p("syn/manifest.json"),   p("radius.manifest.json"),
                                                p("ope.manifest.json"),   p("opl.manifest.json"),
                                                p("grid.manifest.json"),  p("distance.manifest.json"),
                                                p("compare.manifest.json"), p("rate.manifest.json")};
    std::size_t files = 0, identical = 0;
    std::string failed;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (call(runs[i]).code != 0) {
            failed += " run:" + runs[i][0];
            continue;
        }
        auto m = cli::read_manifest(manifests[i]);
        files += m.outputs.size();
        auto rep = call({"replay", manifests[i], "--into", p("replay_" + std::to_string(i))});
        if (rep.code != 0) failed += " replay:" + m.command;
        std::istringstream in(rep.out);
        std::string line;
        while (std::getline(in, line))
            if (line.size() > 2 && line.compare(line.size() - 2, 2, ",1") == 0) ++identical;
    }
    return {failed.empty() && identical == files && files > 0,
            fmt("%zu commands, %zu/%zu output files byte-identical on replay%s", runs.size(), identical, files,
                failed.empty() ? "" : (" (failed:" + failed + ")").c_str())};
}

}  // namespace

int main() {
    const auto dir = fs::temp_directory_path() / "wdro_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir / "c9");
    fs::create_directories(dir / "c10");

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 strong duality", strong_duality},
        {"2 dual bracket", dual_bracket},
        {"3 LSE sandwich", lse_sandwich},
        {"4 smoothing gap", smoothing_gap},
        {"5 rate", rate_check},
        {"6 gradient fidelity", gradient_fidelity},
        {"7 BSGD convergence", bsgd_convergence},
        {"8 KL vs Wasserstein outlier", appendix_d},
        {"9 disjoint support", [&] { return disjoint_support(dir / "c9"); }},
        {"10 manifest replay", [&] { return manifest_replay(dir / "c10"); }},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(dir);
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
