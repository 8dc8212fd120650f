#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wdro/distribution.hpp"
#include "wdro/transport.hpp"

namespace wdro {

/// Cost function f tabulated on a finite candidate support.
struct CostVector {
    SupportPtr support;
    std::vector<double> values;
    double f_max = 0.0;
    double f_min = 0.0;
};

/// Validates finiteness and length; fills f_max / f_min.
CostVector make_cost_vector(SupportPtr support, std::vector<double> values);

/// Result of a one-dimensional dual minimization.
struct DualSolution {
    double lambda_star = 0.0;
    double value = 0.0;
    std::size_t iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    /// Set when epsilon == 0 short-circuits to the plug-in expectation. lambda_star is then
    /// +infinity, the limit the dual approaches.
    bool non_robust_shortcut = false;
};

enum class ReferenceMeasure { UniformOverSupport };

struct SmoothingConfig {
    double eta = 100.0;
    ReferenceMeasure reference = ReferenceMeasure::UniformOverSupport;
};

/// Default tolerance for the dual solvers: 1e-9 times the cost scale.
double default_tolerance(const CostVector& f);

/// eps*lambda + sum_x P0(x) max_z (f(z) - lambda*c(x, z)).
double dual_objective(double lambda, const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                      GroundCost cost = GroundCost::SquaredEuclidean);

/// Worst-case expectation of f over the Wasserstein ball of radius epsilon around P0,
/// computed from the scalar dual by golden-section search on [0, (f_max - f_min)/epsilon].
/// The value is within `tol` of the true minimum. Every point charged by P0 must lie in
/// f's support.
DualSolution wasserstein_dual_solve(const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                                    GroundCost cost, double tol);

/// The same quantity from the primal transport LP. Test oracle.
double primal_oracle(const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                     GroundCost cost = GroundCost::SquaredEuclidean);

/// (1/eta) log((1/n) sum exp(eta v)), evaluated max-shifted.
double lse(std::span<const double> values, double eta);

/// Entropy-smoothed dual: the inner max replaced by lse under a uniform reference measure.
DualSolution regularized_dual_solve(const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                                    GroundCost cost, const SmoothingConfig& smoothing, double tol);

/// KL-ball worst case: min over lambda > 0 of eps*lambda + lambda log E[exp(f/lambda)].
DualSolution kl_dual_solve(const DiscreteDistribution& p0, const CostVector& f, double epsilon, double tol);

}  // namespace wdro
