#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wdro/dataset.hpp"
#include "wdro/rng.hpp"

namespace wdro {

enum class ShiftSide { Train, Test };

/// Distribution shift applied to one side of a synthetic split.
struct ShiftSpec {
    /// Multiplicative factor per context, renormalized afterwards. Empty means no reweighting.
    std::vector<double> context_reweight;
    /// Contexts given zero mass on the shifted side, so the other side's support extends it.
    std::vector<std::size_t> held_out_contexts;
    /// Every xi distribution is tilted by exp(cost_tilt * xi[0]) and renormalized.
    double cost_tilt = 0.0;
    ShiftSide side = ShiftSide::Train;
};

/// Ground-truth generator: context law, per-pair xi laws, logging policy and cost table.
struct SyntheticConfig {
    DiscreteDistribution contexts;
    std::vector<DiscreteDistribution> xi;  // row-major (x, a), all over cost_model.xi_support
    Policy behavior;
    CostModel cost_model;
    ShiftSpec shift;
    std::size_t n_train = 1000;
    std::size_t n_test = 1000;
    std::uint64_t seed = 0;

    std::size_t n_actions() const { return cost_model.n_actions; }
};

/// Sampling laws of both sides after the shift.
struct SyntheticTruth {
    DiscreteDistribution train_contexts;
    DiscreteDistribution test_contexts;
    std::vector<DiscreteDistribution> train_xi;
    std::vector<DiscreteDistribution> test_xi;
};

struct SyntheticData {
    BanditDataset train;
    BanditDataset test;
    SyntheticTruth truth;
};

/// Checks shapes of a hand-built config. Throws InvalidConfig or SupportMismatch.
void validate(const SyntheticConfig& config);

/// Applies the shift. Throws InvalidShift for negative factors, unknown contexts, a
/// non-finite tilt, or a shift that leaves no context mass.
SyntheticTruth shifted_truth(const SyntheticConfig& config);

/// Reweights a distribution by non-negative factors and renormalizes.
DiscreteDistribution reweight(const DiscreteDistribution& p, const std::vector<double>& factors);

/// n records: context, then action from the behavior policy, then xi, per record.
BanditDataset sample_dataset(const SyntheticConfig& config, const DiscreteDistribution& contexts,
                             const std::vector<DiscreteDistribution>& xi, std::size_t n, Rng& rng);

/// Train then test samples from one generator seeded with config.seed.
SyntheticData synth_generate(const SyntheticConfig& config);

/// Scalar generator used by the rate experiment: contexts evenly spaced in [0, 1], xi evenly
/// spaced in [0, 1], seed-dependent laws with every weight bounded away from zero, uniform
/// behavior policy, costs in [0, 1].
SyntheticConfig benchmark_config(std::size_t n_contexts, std::size_t n_xi, std::size_t n_actions,
                                 std::uint64_t seed);

/// splitmix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace wdro
