#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wdro/ope.hpp"

namespace wdro {

enum class Parameterization {
    /// theta holds the probabilities of all but the last action; the last gets the remainder.
    GroupProbClamp,
    /// theta holds logits of all but the last action, whose logit is fixed at zero.
    GroupSoftmax,
};

/// Policy family shared by contexts in the same group.
struct PolicyParams {
    std::vector<double> theta;           // n_groups x (n_actions - 1), row-major
    std::vector<std::size_t> grouping;   // context -> group
    std::size_t n_groups = 0;
    std::size_t n_actions = 0;
    Parameterization parameterization = Parameterization::GroupProbClamp;

    std::size_t dim() const noexcept { return theta.size(); }
    std::size_t n_contexts() const noexcept { return grouping.size(); }
};

/// Builds parameters for the given grouping. Empty theta selects the uniform policy.
PolicyParams make_params(std::vector<std::size_t> grouping, std::size_t n_actions, Parameterization p,
                         std::vector<double> theta = {});

/// One group per context.
std::vector<std::size_t> identity_grouping(std::size_t n_contexts);

/// pi_theta(.|x). Throws UnknownContext for an unmapped context and InvalidConfig when a
/// GroupProbClamp theta lies outside the feasible set.
std::vector<double> policy_probs(const PolicyParams& params, std::size_t context);

Policy to_policy(const PolicyParams& params);

/// Euclidean projection onto the feasible set: identity for GroupSoftmax; per group, onto
/// {theta >= 0, sum theta <= 1} for GroupProbClamp.
void project(PolicyParams& params);

struct ValueGradient {
    double value = 0.0;
    std::vector<double> gradient;
};

/// l(theta, z) = sum_a pi_theta(a|z) m_hat(z, a) and its gradient in theta.
ValueGradient robust_policy_cost(const PolicyParams& params, const RobustCostTable& table, std::size_t context);

struct ObjectiveGradient {
    double value = 0.0;
    std::vector<double> grad_theta;
    double grad_lambda = 0.0;
};

/// Smoothed learning objective at fixed (theta, lambda):
///   E_{x~P}[(1/eta) log((1/|X|) sum_z exp(eta (l(theta, z) - lambda c(x, z))))] + eps * lambda,
/// with its exact gradient.
ObjectiveGradient smoothed_objective(const PolicyParams& params, double lambda, const RobustCostTable& table,
                                     const DiscreteDistribution& context_dist, double epsilon_x, double eta);

/// Biased gradient estimate for one nominal context x from inner points `zetas` (indices
/// into the support, repeats allowed). value is the matching plug-in objective estimate.
/// Passing every index once gives the exact gradient of the objective with P = delta_x.
ObjectiveGradient sampled_gradient(const PolicyParams& params, double lambda, const RobustCostTable& table,
                                   const SupportSet& contexts, std::size_t x, std::span<const std::size_t> zetas,
                                   double epsilon_x, double eta);

enum class StepSchedule {
    Constant,
    /// gamma = step / sqrt(T) for every iteration.
    InverseSqrtT,
};

struct BsgdConfig {
    std::size_t iterations = 1000;
    std::size_t inner_batch = 16;
    double step = 0.5;
    StepSchedule schedule = StepSchedule::InverseSqrtT;
    double eta = 100.0;
    double epsilon_x = 0.1;
    double lambda0 = 0.0;
    /// Upper bound for lambda. 0 selects y_max / epsilon_x.
    double lambda_cap = 0.0;
    std::uint64_t seed = 0;
    bool record_trace = true;
};

struct TraceRow {
    std::size_t t = 0;
    std::vector<double> theta;
    double lambda = 0.0;
    std::size_t context = 0;
    double objective = 0.0;
};

struct LearnResult {
    PolicyParams params;
    double lambda = 0.0;
    std::vector<TraceRow> trace;  // state before each update
};

/// Biased SGD on the smoothed objective. Per iteration, draws the nominal context from
/// context_dist and then inner_batch points uniformly from its support, in that order.
LearnResult bsgd_learn(const RobustCostTable& table, const DiscreteDistribution& context_dist,
                       const PolicyParams& init, const BsgdConfig& config);

struct GridOptions {
    std::size_t resolution = 101;
    /// Logit range for GroupSoftmax grids.
    double logit_bound = 8.0;
    unsigned threads = 1;
    double tol = 0.0;
};

struct GridResult {
    PolicyParams params;
    double value = 0.0;
    std::size_t evaluated = 0;
};

/// Minimizes the two-level value over a uniform grid of feasible parameters. Among values
/// within the solver tolerance of the minimum the lowest grid index wins. Throws
/// DimensionTooLarge above three parameters.
GridResult exact_opl(const RobustCostTable& table, const DiscreteDistribution& context_dist, double epsilon_x,
                     const MethodSpec& method, const PolicyParams& shape, const GridOptions& options = {});

}  // namespace wdro
