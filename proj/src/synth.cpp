#include "wdro/synth.hpp"

#include <cmath>
#include <string>

#include "wdro/error.hpp"

namespace wdro {

namespace {

std::vector<DiscreteDistribution> tilt_all(const std::vector<DiscreteDistribution>& xi, double tilt) {
    std::vector<DiscreteDistribution> out;
    out.reserve(xi.size());
    for (const auto& d : xi) {
        std::vector<double> factors(d.size());
        for (std::size_t k = 0; k < d.size(); ++k) factors[k] = std::exp(tilt * d.support()[k][0]);
        out.push_back(reweight(d, factors));
    }
    return out;
}

SupportPtr evenly_spaced(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    return std::make_shared<const SupportSet>(SupportSet::scalar(v));
}

std::vector<double> floored_weights(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& v : w) v = 0.5 + rng.uniform01();
    return w;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void validate(const SyntheticConfig& c) {
    const std::size_t nx = c.contexts.size(), na = c.cost_model.n_actions;
    if (c.cost_model.n_contexts != nx) throw Error(ErrorKind::InvalidConfig, "cost model context count differs");
    if (c.xi.size() != nx * na) {
        throw Error(ErrorKind::InvalidConfig, "expected " + std::to_string(nx * na) + " xi distributions");
    }
    for (const auto& d : c.xi) {
        if (!(d.support() == *c.cost_model.xi_support)) {
            throw Error(ErrorKind::SupportMismatch, "xi distributions must live on the cost model's support");
        }
    }
    if (c.behavior.n_contexts() != nx || c.behavior.n_actions() != na) {
        throw Error(ErrorKind::PolicyContextMismatch, "behavior policy shape differs from the generator");
    }
    if (c.cost_model.xi_support->dim() != 1 && c.shift.cost_tilt != 0.0) {
        throw Error(ErrorKind::InvalidShift, "cost tilt needs a scalar xi support");
    }
}

DiscreteDistribution reweight(const DiscreteDistribution& p, const std::vector<double>& factors) {
    if (factors.size() != p.size()) {
        throw Error(ErrorKind::InvalidShift, "expected " + std::to_string(p.size()) + " reweighting factors");
    }
    std::vector<double> w(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(factors[i] >= 0.0) || !std::isfinite(factors[i])) {
            throw Error(ErrorKind::InvalidShift, "reweighting factor " + std::to_string(i) + " is negative or not finite");
        }
        w[i] = p.weight(i) * factors[i];
        sum += w[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) throw Error(ErrorKind::InvalidShift, "shift removes all mass");
    return make_distribution(p.support_ptr(), std::move(w), Normalization::Rescale);
}

SyntheticTruth shifted_truth(const SyntheticConfig& c) {
    validate(c);
    const ShiftSpec& s = c.shift;
    if (!std::isfinite(s.cost_tilt)) throw Error(ErrorKind::InvalidShift, "cost tilt must be finite");
    std::vector<double> factors = s.context_reweight.empty() ? std::vector<double>(c.contexts.size(), 1.0)
                                                             : s.context_reweight;
    if (factors.size() != c.contexts.size()) {
        throw Error(ErrorKind::InvalidShift, "expected " + std::to_string(c.contexts.size()) + " reweighting factors");
    }
    for (std::size_t x : s.held_out_contexts) {
        if (x >= factors.size()) throw Error(ErrorKind::InvalidShift, "held-out context " + std::to_string(x) + " out of range");
        factors[x] = 0.0;
    }
    DiscreteDistribution shifted_contexts = reweight(c.contexts, factors);
    std::vector<DiscreteDistribution> shifted_xi = s.cost_tilt == 0.0 ? c.xi : tilt_all(c.xi, s.cost_tilt);

    if (s.side == ShiftSide::Train) {
        return {std::move(shifted_contexts), c.contexts, std::move(shifted_xi), c.xi};
    }
    return {c.contexts, std::move(shifted_contexts), c.xi, std::move(shifted_xi)};
}

BanditDataset sample_dataset(const SyntheticConfig& c, const DiscreteDistribution& contexts,
                             const std::vector<DiscreteDistribution>& xi, std::size_t n, Rng& rng) {
    const std::size_t na = c.n_actions();
    const CategoricalSampler pick_context(contexts.weights());
    std::vector<CategoricalSampler> pick_action, pick_xi;
    for (const auto& row : c.behavior.probs) pick_action.emplace_back(row);
    for (const auto& d : xi) pick_xi.emplace_back(d.weights());

    std::vector<Record> records(n);
    for (auto& r : records) {
        r.context = pick_context(rng);
        r.action = pick_action[r.context](rng);
        r.xi = pick_xi[r.context * na + r.action](rng);
        r.cost = c.cost_model(r.context, r.action, r.xi);
    }
    return make_dataset(c.contexts.support_ptr(), default_action_labels(na), c.cost_model.xi_support,
                        std::move(records), c.cost_model.y_max, c.behavior, c.cost_model);
}

SyntheticData synth_generate(const SyntheticConfig& c) {
    SyntheticTruth truth = shifted_truth(c);
    Rng rng(c.seed);
    BanditDataset train = sample_dataset(c, truth.train_contexts, truth.train_xi, c.n_train, rng);
    BanditDataset test = sample_dataset(c, truth.test_contexts, truth.test_xi, c.n_test, rng);
    return {std::move(train), std::move(test), std::move(truth)};
}

SyntheticConfig benchmark_config(std::size_t n_contexts, std::size_t n_xi, std::size_t n_actions,
                                 std::uint64_t seed) {
    if (n_contexts == 0 || n_xi == 0 || n_actions == 0) {
        throw Error(ErrorKind::InvalidConfig, "generator sizes must be positive");
    }
    Rng rng(seed);
    auto xs = evenly_spaced(n_contexts);
    auto ks = evenly_spaced(n_xi);
    auto contexts = make_distribution(xs, floored_weights(rng, n_contexts), Normalization::Rescale);
    std::vector<DiscreteDistribution> xi;
    std::vector<double> y;
    for (std::size_t p = 0; p < n_contexts * n_actions; ++p) {
        xi.push_back(make_distribution(ks, floored_weights(rng, n_xi), Normalization::Rescale));
        const double base = 0.3 * rng.uniform01();
        const double slope = 0.4 + 0.3 * rng.uniform01();
        for (std::size_t k = 0; k < n_xi; ++k) y.push_back(base + slope * (*ks)[k][0]);
    }
    SyntheticConfig c{std::move(contexts), std::move(xi), uniform_policy(n_contexts, n_actions),
                      make_cost_model(ks, n_contexts, n_actions, std::move(y), 1.0), ShiftSpec{}};
    c.seed = seed;
    return c;
}

}  // namespace wdro
