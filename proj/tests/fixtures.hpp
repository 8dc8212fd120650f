#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <cmath>
#include <vector>

#include "wdro/opl.hpp"
#include "wdro/rng.hpp"
#include "wdro/synth.hpp"

namespace wdro::fixtures {

/// Two contexts at 0 and 1, two actions, probabilities per context (l is linear in theta).
struct ConvexFixture {
    RobustCostTable table;
    DiscreteDistribution contexts;
    PolicyParams init;
    double epsilon_x;
    double eta;
};

inline ConvexFixture convex_fixture() {
    auto support = std::make_shared<const SupportSet>(SupportSet::scalar(std::vector<double>{0.0, 1.0}));
    return {make_cost_table(2, 2, {0.3, 0.7, 0.8, 0.2}, 1.0), make_distribution(support, {0.6, 0.4}),
            make_params(identity_grouping(2), 2, Parameterization::GroupProbClamp), 0.1, 50.0};
}

/// Benchmark generator with random shape and one sample of size n from its true laws.
struct OpeInstance {
    SyntheticConfig gen;
    BanditDataset data;
};

inline OpeInstance random_instance(Rng& rng, std::size_t n) {
    const std::size_t nx = 1 + rng.uniform_index(5), nk = 2 + rng.uniform_index(4), na = 1 + rng.uniform_index(3);
    auto gen = benchmark_config(nx, nk, na, rng.next());
    Rng draw(rng.next());
    auto data = sample_dataset(gen, gen.contexts, gen.xi, n, draw);
    return {std::move(gen), std::move(data)};
}

/// Policy with every probability bounded away from zero.
inline Policy random_policy(Rng& rng, std::size_t nx, std::size_t na) {
    std::vector<std::vector<double>> rows(nx, std::vector<double>(na));
    for (auto& r : rows) {
        double s = 0;
        for (auto& p : r) s += (p = rng.uniform01() + 1e-3);
        for (auto& p : r) p /= s;
        double t = 0;
        for (std::size_t a = 0; a + 1 < na; ++a) t += r[a];
        r[na - 1] = 1.0 - t;
    }
    return make_policy(rows);
}

/// Random table over a random scalar context support with y_max = 1.
struct RandomOpl {
    RobustCostTable table;
    DiscreteDistribution contexts;
    PolicyParams params;
};

inline RandomOpl random_opl(Rng& rng, std::size_t n_contexts, std::size_t n_actions, std::size_t n_groups,
                            Parameterization param) {
    std::vector<double> pts(n_contexts);
    for (std::size_t i = 0; i < n_contexts; ++i) pts[i] = static_cast<double>(i) / static_cast<double>(n_contexts);
    auto support = std::make_shared<const SupportSet>(SupportSet::scalar(pts));
    std::vector<double> w(n_contexts), m(n_contexts * n_actions);
    for (auto& v : w) v = 0.1 + rng.uniform01();
    for (auto& v : m) v = rng.uniform01();
    std::vector<std::size_t> grouping(n_contexts);
    for (std::size_t x = 0; x < n_contexts; ++x) grouping[x] = x < n_groups ? x : rng.uniform_index(n_groups);
    const std::size_t dim = n_groups * (n_actions - 1);
    std::vector<double> theta(dim);
    if (param == Parameterization::GroupSoftmax) {
        for (auto& t : theta) t = 4.0 * rng.uniform01() - 2.0;
    } else {
        // Interior point: group probabilities summing to at most 0.9.
        for (std::size_t g = 0; g < n_groups; ++g) {
            double s = 0.0;
            std::vector<double> raw(n_actions);
            for (auto& r : raw) s += r = 0.1 + rng.uniform01();
            for (std::size_t i = 0; i + 1 < n_actions; ++i) theta[g * (n_actions - 1) + i] = 0.9 * raw[i] / s;
        }
    }
    return {make_cost_table(n_contexts, n_actions, std::move(m), 1.0),
            make_distribution(support, std::move(w), Normalization::Rescale),
            make_params(std::move(grouping), n_actions, param, std::move(theta))};
}

/// max_i |a_i - b_i| / max(max_i |b_i|, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-3) {
    double num = 0.0, den = floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / den;
}

/// Central differences of the smoothed objective in (theta, lambda), step h.
inline std::vector<double> fd_gradient(const PolicyParams& p, double lambda, const RobustCostTable& table,
                                       const DiscreteDistribution& ctx, double eps, double eta, double h = 1e-6) {
    std::vector<double> g;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        PolicyParams up = p, down = p;
        up.theta[i] += h;
        down.theta[i] -= h;
        g.push_back((smoothed_objective(up, lambda, table, ctx, eps, eta).value -
                     smoothed_objective(down, lambda, table, ctx, eps, eta).value) /
                    (2 * h));
    }
    g.push_back((smoothed_objective(p, lambda + h, table, ctx, eps, eta).value -
                 smoothed_objective(p, lambda - h, table, ctx, eps, eta).value) /
                (2 * h));
    return g;
}

}  // namespace wdro::fixtures
