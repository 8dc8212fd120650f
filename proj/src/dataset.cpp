#include "wdro/dataset.hpp"

#include <cmath>
#include <string>

#include "wdro/error.hpp"

namespace wdro {

std::vector<double> CostModel::row(std::size_t x, std::size_t a) const {
    const std::size_t k = xi_support->size();
    const auto begin = y.begin() + static_cast<std::ptrdiff_t>((x * n_actions + a) * k);
    return {begin, begin + static_cast<std::ptrdiff_t>(k)};
}

CostModel make_cost_model(SupportPtr xi_support, std::size_t n_contexts, std::size_t n_actions,
                          std::vector<double> y, double y_max) {
    if (!xi_support || xi_support->empty()) throw Error(ErrorKind::EmptyInput, "empty cost support");
    if (n_contexts == 0 || n_actions == 0) throw Error(ErrorKind::EmptyInput, "cost model without pairs");
    if (!(y_max >= 0.0) || !std::isfinite(y_max)) throw Error(ErrorKind::InvalidConfig, "y_max must be finite and >= 0");
    const std::size_t expected = n_contexts * n_actions * xi_support->size();
    if (y.size() != expected) {
        throw Error(ErrorKind::LengthMismatch,
                    "cost model has " + std::to_string(y.size()) + " entries, expected " + std::to_string(expected));
    }
    for (double v : y) {
        if (!(v >= 0.0 && v <= y_max)) {
            throw Error(ErrorKind::InvalidConfig, "cost " + std::to_string(v) + " outside [0, y_max]");
        }
    }
    return CostModel{std::move(xi_support), n_contexts, n_actions, std::move(y), y_max};
}

BanditDataset make_dataset(SupportPtr contexts, std::vector<std::string> actions, SupportPtr xi_support,
                           std::vector<Record> records, double y_max, std::optional<Policy> behavior_policy,
                           std::optional<CostModel> cost_model) {
    if (!contexts || contexts->empty()) throw Error(ErrorKind::EmptyInput, "empty context support");
    if (!xi_support || xi_support->empty()) throw Error(ErrorKind::EmptyInput, "empty cost support");
    if (actions.empty()) throw Error(ErrorKind::EmptyInput, "no actions");
    if (!(y_max >= 0.0) || !std::isfinite(y_max)) throw Error(ErrorKind::InvalidConfig, "y_max must be finite and >= 0");
    const std::size_t nx = contexts->size(), na = actions.size(), nk = xi_support->size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Record& r = records[i];
        if (r.context >= nx || r.action >= na || r.xi >= nk) {
            throw Error(ErrorKind::InvalidConfig, "record " + std::to_string(i) + " has an index out of range");
        }
        if (!(r.cost >= 0.0 && r.cost <= y_max)) {
            throw Error(ErrorKind::InvalidConfig,
                        "record " + std::to_string(i) + " cost " + std::to_string(r.cost) + " outside [0, y_max]");
        }
        pairs.emplace_back(r.context, r.action);
    }
    if (behavior_policy && (behavior_policy->n_contexts() != nx || behavior_policy->n_actions() != na)) {
        throw Error(ErrorKind::PolicyContextMismatch, "behavior policy shape differs from the dataset");
    }
    if (cost_model) {
        if (cost_model->n_contexts != nx || cost_model->n_actions != na ||
            !(*cost_model->xi_support == *xi_support)) {
            throw Error(ErrorKind::SupportMismatch, "cost model does not match the dataset supports");
        }
        if (cost_model->y_max > y_max) throw Error(ErrorKind::InvalidConfig, "cost model exceeds the dataset y_max");
    }
    BanditDataset d;
    d.contexts = std::move(contexts);
    d.actions = std::move(actions);
    d.xi_support = std::move(xi_support);
    d.records = std::move(records);
    d.y_max = y_max;
    d.behavior_policy = std::move(behavior_policy);
    d.cost_model = std::move(cost_model);
    d.diagnostics = compute_diagnostics(pairs, nx, na);
    return d;
}

DiscreteDistribution context_distribution(const BanditDataset& data) {
    if (data.records.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no records");
    std::vector<std::size_t> idx;
    idx.reserve(data.records.size());
    for (const auto& r : data.records) idx.push_back(r.context);
    return empirical_from_indices(idx, data.contexts);
}

CostModel identity_cost_model(const BanditDataset& data) {
    if (data.xi_support->dim() != 1) {
        throw Error(ErrorKind::InvalidConfig, "identity cost model needs a scalar cost support");
    }
    const std::size_t nk = data.xi_support->size();
    std::vector<double> y;
    y.reserve(data.n_contexts() * data.n_actions() * nk);
    for (std::size_t x = 0; x < data.n_contexts(); ++x) {
        for (std::size_t a = 0; a < data.n_actions(); ++a) {
            for (std::size_t k = 0; k < nk; ++k) y.push_back((*data.xi_support)[k][0]);
        }
    }
    return make_cost_model(data.xi_support, data.n_contexts(), data.n_actions(), std::move(y), data.y_max);
}

CostModel effective_cost_model(const BanditDataset& data) {
    return data.cost_model ? *data.cost_model : identity_cost_model(data);
}

std::vector<std::string> default_action_labels(std::size_t n_actions) {
    std::vector<std::string> out;
    for (std::size_t a = 0; a < n_actions; ++a) out.push_back("a" + std::to_string(a));
    return out;
}

}  // namespace wdro
