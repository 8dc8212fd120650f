#include "wdro/policy.hpp"

#include <cmath>
#include <string>

#include "wdro/error.hpp"

namespace wdro {

Policy make_policy(std::vector<std::vector<double>> probs) {
    if (probs.empty()) throw Error(ErrorKind::EmptyInput, "policy without contexts");
    const std::size_t na = probs.front().size();
    if (na == 0) throw Error(ErrorKind::EmptyInput, "policy without actions");
    for (std::size_t x = 0; x < probs.size(); ++x) {
        auto& row = probs[x];
        if (row.size() != na) {
            throw Error(ErrorKind::PolicyContextMismatch,
                        "context " + std::to_string(x) + " has " + std::to_string(row.size()) +
                            " action probabilities, expected " + std::to_string(na));
        }
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw Error(ErrorKind::InvalidConfig, "policy probabilities must be finite and non-negative");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error(ErrorKind::InvalidConfig,
                        "policy row " + std::to_string(x) + " sums to " + std::to_string(sum));
        }
        for (double& p : row) p /= sum;
    }
    return Policy{std::move(probs)};
}

Policy uniform_policy(std::size_t n_contexts, std::size_t n_actions) {
    return make_policy(std::vector<std::vector<double>>(
        n_contexts, std::vector<double>(n_actions, 1.0 / static_cast<double>(n_actions))));
}

Policy deterministic_policy(std::size_t n_contexts, std::size_t n_actions, std::size_t action) {
    if (action >= n_actions) throw Error(ErrorKind::InvalidConfig, "action index out of range");
    std::vector<double> row(n_actions, 0.0);
    row[action] = 1.0;
    return make_policy(std::vector<std::vector<double>>(n_contexts, row));
}

}  // namespace wdro
