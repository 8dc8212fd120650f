#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wdro {

/// Stochastic policy: one probability vector over actions per context.
struct Policy {
    std::vector<std::vector<double>> probs;

    std::size_t n_contexts() const noexcept { return probs.size(); }
    std::size_t n_actions() const noexcept { return probs.empty() ? 0 : probs.front().size(); }
    const std::vector<double>& operator[](std::size_t x) const { return probs[x]; }
};

/// Validates shape and that every row is a probability vector; rows within 1e-9 of one are
/// renormalized. Throws PolicyContextMismatch on ragged rows, InvalidConfig otherwise.
Policy make_policy(std::vector<std::vector<double>> probs);

Policy uniform_policy(std::size_t n_contexts, std::size_t n_actions);

/// Every context picks `action` with probability one.
Policy deterministic_policy(std::size_t n_contexts, std::size_t n_actions, std::size_t action);

}  // namespace wdro
