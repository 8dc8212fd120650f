#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "wdro/dataset.hpp"
#include "wdro/dual.hpp"
#include "wdro/policy.hpp"
#include "wdro/synth.hpp"

namespace wdro {

enum class Method {
    Exact,
    Regularized,
    KL,
    /// Non-robust control: empirical means, radii ignored.
    Plugin,
};

std::string_view to_string(Method m) noexcept;
/// "exact", "regularized", "kl" or "plugin"; InvalidConfig otherwise.
Method parse_method(std::string_view name);

struct MethodSpec {
    Method kind = Method::Exact;
    double eta = 100.0;  // only used by Regularized
};

/// Runs the solver selected by `method` on one instance.
DualSolution solve(const MethodSpec& method, const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                   double tol);

/// Robust cost per (context, action).
struct RobustCostTable {
    std::size_t n_contexts = 0;
    std::size_t n_actions = 0;
    std::vector<double> m_hat;  // row-major (x, a)
    double y_max = 0.0;
    MethodSpec method;
    double epsilon_c = 0.0;
    /// Pairs filled with y_max because they had no samples.
    std::vector<std::pair<std::size_t, std::size_t>> imputed;

    double operator()(std::size_t x, std::size_t a) const { return m_hat[x * n_actions + a]; }
};

/// Table from explicit values. Throws IncompleteTable on a size mismatch or a non-finite entry.
RobustCostTable make_cost_table(std::size_t n_contexts, std::size_t n_actions, std::vector<double> m_hat,
                                double y_max);

struct TableOptions {
    double tol = 0.0;  // 0 selects 1e-9 * y_max
    unsigned threads = 1;
    /// Fill unobserved pairs with y_max instead of failing with MissingPair.
    bool impute_missing_ymax = false;
};

/// Solves the inner problem independently for every pair on the empirical xi law of the
/// pair's samples. Results are merged by index, so the table is identical for any thread
/// count. Throws MissingPair naming every unobserved pair unless imputation is enabled.
RobustCostTable robust_cost_table(const BanditDataset& data, const CostModel& model, double epsilon_c,
                                  const MethodSpec& method, const TableOptions& options = {});

/// l(z) = sum_a pi(a|z) m_hat(z, a) for every context z.
std::vector<double> policy_cost_vector(const Policy& policy, const RobustCostTable& table);

/// Outer problem over the context support. `tol` of 0 selects 1e-9 * y_max.
DualSolution evaluate_policy(const Policy& policy, const RobustCostTable& table,
                             const DiscreteDistribution& context_dist, double epsilon_x, const MethodSpec& method,
                             double tol = 0.0);

/// Policy value under known laws: the same two-level problem with the true distributions
/// in place of the empirical ones.
double population_value(const Policy& policy, const CostModel& model, const DiscreteDistribution& contexts,
                        const std::vector<DiscreteDistribution>& xi, double epsilon_x, double epsilon_c,
                        const MethodSpec& method, double tol = 0.0);

struct RateConfig {
    RateConfig(SyntheticConfig gen, Policy pol) : generator(std::move(gen)), policy(std::move(pol)) {}

    SyntheticConfig generator;
    Policy policy;
    double epsilon_x = 0.1;
    double epsilon_c = 0.1;
    MethodSpec method;
    std::vector<std::size_t> n_grid;
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool impute_missing_ymax = true;
};

struct RatePoint {
    std::size_t n = 0;
    double median_error = 0.0;
    double mean_error = 0.0;
    /// Trials in which at least one pair was unobserved and imputed.
    std::size_t imputed_trials = 0;
};

struct RateResult {
    double truth = 0.0;
    std::vector<RatePoint> points;
    double slope = 0.0;  // least-squares slope of log median error on log n
};

/// Draws `trials` training sets per n from the generator's training law and reports the
/// median |V_hat - V|. Trial streams are seeded from (seed, n, trial), so results do not
/// depend on the thread count. Throws EmptyExperiment when trials or the grid is empty.
RateResult rate_experiment(const RateConfig& config);

/// Least-squares slope of log(y) on log(x). Points with y <= 0 are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wdro
