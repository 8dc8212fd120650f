#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "wdro/distribution.hpp"
#include "wdro/policy.hpp"

namespace wdro {

/// Tabulated cost y(x, a, xi) on contexts x actions x cost-observation support.
struct CostModel {
    SupportPtr xi_support;
    std::size_t n_contexts = 0;
    std::size_t n_actions = 0;
    std::vector<double> y;  // row-major (x, a, xi)
    double y_max = 0.0;

    double operator()(std::size_t x, std::size_t a, std::size_t xi) const {
        return y[(x * n_actions + a) * xi_support->size() + xi];
    }
    /// Costs of one (x, a) pair over the whole xi support.
    std::vector<double> row(std::size_t x, std::size_t a) const;
};

/// Checks shape and 0 <= y <= y_max.
CostModel make_cost_model(SupportPtr xi_support, std::size_t n_contexts, std::size_t n_actions,
                          std::vector<double> y, double y_max);

/// One logged interaction; indices refer to the dataset's supports.
struct Record {
    std::size_t context = 0;
    std::size_t action = 0;
    std::size_t xi = 0;
    double cost = 0.0;

    bool operator==(const Record&) const = default;
};

struct BanditDataset {
    SupportPtr contexts;
    std::vector<std::string> actions;
    SupportPtr xi_support;
    std::vector<Record> records;
    double y_max = 0.0;
    std::optional<Policy> behavior_policy;
    std::optional<CostModel> cost_model;
    DatasetDiagnostics diagnostics;

    std::size_t n_contexts() const { return contexts->size(); }
    std::size_t n_actions() const { return actions.size(); }
};

/// Validates indices and cost range and fills the diagnostics.
BanditDataset make_dataset(SupportPtr contexts, std::vector<std::string> actions, SupportPtr xi_support,
                           std::vector<Record> records, double y_max,
                           std::optional<Policy> behavior_policy = std::nullopt,
                           std::optional<CostModel> cost_model = std::nullopt);

/// Empirical context distribution over the full context support.
DiscreteDistribution context_distribution(const BanditDataset& data);

/// y(x, a, xi) = xi for datasets whose xi support is the set of observed scalar costs.
CostModel identity_cost_model(const BanditDataset& data);

/// The dataset's own cost model, or the identity model when it carries none.
CostModel effective_cost_model(const BanditDataset& data);

/// "a0", "a1", ... for generated data.
std::vector<std::string> default_action_labels(std::size_t n_actions);

}  // namespace wdro
