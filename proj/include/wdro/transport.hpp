#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wdro/distribution.hpp"

namespace wdro {

enum class GroundCost {
    SquaredEuclidean,
};

/// c(a, b) for the given ground cost. Points must have equal arity.
double ground_cost(GroundCost cost, std::span<const double> a, std::span<const double> b);

/// Dense |from| x |to| matrix of ground costs, row-major.
std::vector<double> cost_matrix(GroundCost cost, const SupportSet& from, const SupportSet& to);

/// Coupling between two distributions; rows follow P's support, columns Q's.
struct TransportPlan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> mass;  // row-major

    double operator()(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
};

struct TransportResult {
    double distance = 0.0;
    TransportPlan plan;
    std::size_t pivots = 0;
};

/// Exact optimal transport cost between P and Q (transportation simplex).
/// Supports may differ but must share a dimension.
TransportResult wasserstein_distance(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                     GroundCost cost = GroundCost::SquaredEuclidean);

/// Seeded half/half split of `contexts`; returns the distance between the two empirical
/// distributions over the union of observed points. Odd counts put the extra sample first.
double split_radius_estimate(std::span<const Point> contexts, std::uint64_t seed,
                             GroundCost cost = GroundCost::SquaredEuclidean);

/// The split used by split_radius_estimate: indices of the first half, then the second.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_halves(std::size_t n,
                                                                           std::uint64_t seed);

/// Distance between two explicit halves, building the merged support.
double halves_distance(std::span<const Point> first, std::span<const Point> second,
                       GroundCost cost = GroundCost::SquaredEuclidean);

}  // namespace wdro
