#include "wdro/ope.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wdro/error.hpp"
#include "wdro/parallel.hpp"

namespace wdro {

namespace {

double resolve_tol(double tol, double y_max) {
    if (tol > 0.0) return tol;
    if (tol < 0.0 || std::isnan(tol)) throw Error(ErrorKind::InvalidTolerance, "tolerance must be positive");
    return 1e-9 * (y_max > 0.0 ? y_max : 1.0);
}

void check_radius(double epsilon, const char* name) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw Error(ErrorKind::NegativeEpsilon, std::string(name) + " must be finite and non-negative");
    }
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::Exact: return "exact";
        case Method::Regularized: return "regularized";
        case Method::KL: return "kl";
        case Method::Plugin: return "plugin";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::Exact, Method::Regularized, Method::KL, Method::Plugin}) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

DualSolution solve(const MethodSpec& method, const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                   double tol) {
    constexpr auto sq = GroundCost::SquaredEuclidean;
    switch (method.kind) {
        case Method::Exact: return wasserstein_dual_solve(p0, f, epsilon, sq, tol);
        case Method::Regularized: return regularized_dual_solve(p0, f, epsilon, sq, {method.eta}, tol);
        case Method::KL: return kl_dual_solve(p0, f, epsilon, tol);
        case Method::Plugin: return wasserstein_dual_solve(p0, f, 0.0, sq, tol);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown method");
}

RobustCostTable make_cost_table(std::size_t n_contexts, std::size_t n_actions, std::vector<double> m_hat,
                                double y_max) {
    if (n_contexts == 0 || n_actions == 0 || m_hat.size() != n_contexts * n_actions) {
        throw Error(ErrorKind::IncompleteTable, "table has " + std::to_string(m_hat.size()) + " entries for " +
                                                    std::to_string(n_contexts) + " x " + std::to_string(n_actions) +
                                                    " pairs");
    }
    for (std::size_t i = 0; i < m_hat.size(); ++i) {
        if (!std::isfinite(m_hat[i])) {
            throw Error(ErrorKind::IncompleteTable, "entry (" + std::to_string(i / n_actions) + ", " +
                                                        std::to_string(i % n_actions) + ") is not set");
        }
    }
    RobustCostTable t;
    t.n_contexts = n_contexts;
    t.n_actions = n_actions;
    t.m_hat = std::move(m_hat);
    t.y_max = y_max;
    return t;
}

RobustCostTable robust_cost_table(const BanditDataset& data, const CostModel& model, double epsilon_c,
                                  const MethodSpec& method, const TableOptions& options) {
    check_radius(epsilon_c, "epsilon_c");
    const std::size_t nx = data.n_contexts(), na = data.n_actions();
    if (model.n_contexts != nx || model.n_actions != na || !(*model.xi_support == *data.xi_support)) {
        throw Error(ErrorKind::SupportMismatch, "cost model does not match the dataset");
    }
    const double tol = resolve_tol(options.tol, model.y_max);

    std::vector<std::vector<std::size_t>> samples(nx * na);
    for (const auto& r : data.records) samples[r.context * na + r.action].push_back(r.xi);

    RobustCostTable table;
    table.n_contexts = nx;
    table.n_actions = na;
    table.y_max = model.y_max;
    table.method = method;
    table.epsilon_c = epsilon_c;
    table.m_hat.assign(nx * na, 0.0);

    std::string missing;
    for (std::size_t p = 0; p < samples.size(); ++p) {
        if (!samples[p].empty()) continue;
        table.imputed.emplace_back(p / na, p % na);
        if (!missing.empty()) missing += ", ";
        missing += "(" + std::to_string(p / na) + ", " + std::to_string(p % na) + ")";
    }
    if (!table.imputed.empty() && !options.impute_missing_ymax) {
        throw Error(ErrorKind::MissingPair, "no samples for pairs " + missing);
    }

    parallel_for(samples.size(), options.threads, [&](std::size_t p) {
        if (samples[p].empty()) {
            table.m_hat[p] = model.y_max;
            return;
        }
        const auto p0 = empirical_from_indices(samples[p], data.xi_support);
        const auto f = make_cost_vector(data.xi_support, model.row(p / na, p % na));
        table.m_hat[p] = solve(method, p0, f, epsilon_c, tol).value;
    });
    return table;
}

std::vector<double> policy_cost_vector(const Policy& policy, const RobustCostTable& table) {
    if (table.m_hat.size() != table.n_contexts * table.n_actions || table.m_hat.empty()) {
        throw Error(ErrorKind::IncompleteTable, "table does not cover every pair");
    }
    if (policy.n_contexts() != table.n_contexts || policy.n_actions() != table.n_actions) {
        throw Error(ErrorKind::PolicyContextMismatch,
                    "policy covers " + std::to_string(policy.n_contexts()) + " x " +
                        std::to_string(policy.n_actions()) + " pairs, table " + std::to_string(table.n_contexts) +
                        " x " + std::to_string(table.n_actions));
    }
    std::vector<double> l(table.n_contexts, 0.0);
    for (std::size_t x = 0; x < table.n_contexts; ++x) {
        for (std::size_t a = 0; a < table.n_actions; ++a) {
            const double m = table(x, a);
            if (!std::isfinite(m)) throw Error(ErrorKind::IncompleteTable, "table entry is not set");
            l[x] += policy[x][a] * m;
        }
    }
    return l;
}

DualSolution evaluate_policy(const Policy& policy, const RobustCostTable& table,
                             const DiscreteDistribution& context_dist, double epsilon_x, const MethodSpec& method,
                             double tol) {
    check_radius(epsilon_x, "epsilon_x");
    if (context_dist.size() != table.n_contexts) {
        throw Error(ErrorKind::PolicyContextMismatch, "context distribution has " +
                                                          std::to_string(context_dist.size()) + " points, table " +
                                                          std::to_string(table.n_contexts));
    }
    auto f = make_cost_vector(context_dist.support_ptr(), policy_cost_vector(policy, table));
    return solve(method, context_dist, f, epsilon_x, resolve_tol(tol, table.y_max));
}

double population_value(const Policy& policy, const CostModel& model, const DiscreteDistribution& contexts,
                        const std::vector<DiscreteDistribution>& xi, double epsilon_x, double epsilon_c,
                        const MethodSpec& method, double tol) {
    check_radius(epsilon_x, "epsilon_x");
    check_radius(epsilon_c, "epsilon_c");
    const std::size_t nx = model.n_contexts, na = model.n_actions;
    if (xi.size() != nx * na) throw Error(ErrorKind::InvalidConfig, "one xi distribution per pair is required");
    tol = resolve_tol(tol, model.y_max);
    std::vector<double> m(nx * na);
    for (std::size_t p = 0; p < m.size(); ++p) {
        m[p] = solve(method, xi[p], make_cost_vector(model.xi_support, model.row(p / na, p % na)), epsilon_c, tol)
                   .value;
    }
    auto table = make_cost_table(nx, na, std::move(m), model.y_max);
    return evaluate_policy(policy, table, contexts, epsilon_x, method, tol).value;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw Error(ErrorKind::Numerical, "slope needs two positive points");
    const double den = static_cast<double>(n) * sxx - sx * sx;
    if (den == 0.0) throw Error(ErrorKind::Numerical, "slope needs two distinct sample sizes");
    return (static_cast<double>(n) * sxy - sx * sy) / den;
}

RateResult rate_experiment(const RateConfig& c) {
    if (c.trials == 0 || c.n_grid.empty()) throw Error(ErrorKind::EmptyExperiment, "no trials requested");
    for (std::size_t n : c.n_grid) {
        if (n == 0) throw Error(ErrorKind::EmptyExperiment, "sample sizes must be positive");
    }
    const SyntheticTruth truth = shifted_truth(c.generator);
    RateResult result;
    result.truth = population_value(c.policy, c.generator.cost_model, truth.train_contexts, truth.train_xi,
                                    c.epsilon_x, c.epsilon_c, c.method);

    TableOptions opts;
    opts.impute_missing_ymax = c.impute_missing_ymax;
    std::vector<double> ns, medians;
    for (std::size_t gi = 0; gi < c.n_grid.size(); ++gi) {
        const std::size_t n = c.n_grid[gi];
        std::vector<double> errors(c.trials);
        std::vector<char> imputed(c.trials, 0);
        parallel_for(c.trials, c.threads, [&](std::size_t t) {
            Rng rng(mix_seed(mix_seed(c.seed, n), t));
            const auto data = sample_dataset(c.generator, truth.train_contexts, truth.train_xi, n, rng);
            const auto table = robust_cost_table(data, c.generator.cost_model, c.epsilon_c, c.method, opts);
            const double v = evaluate_policy(c.policy, table, context_distribution(data), c.epsilon_x, c.method).value;
            errors[t] = std::abs(v - result.truth);
            imputed[t] = table.imputed.empty() ? 0 : 1;
        });
        RatePoint pt;
        pt.n = n;
        pt.median_error = median(errors);
        double sum = 0.0;
        for (double e : errors) sum += e;
        pt.mean_error = sum / static_cast<double>(errors.size());
        pt.imputed_trials = static_cast<std::size_t>(std::count(imputed.begin(), imputed.end(), 1));
        result.points.push_back(pt);
        ns.push_back(static_cast<double>(n));
        medians.push_back(pt.median_error);
    }
    result.slope = c.n_grid.size() >= 2 ? loglog_slope(ns, medians) : 0.0;
    return result;
}

}  // namespace wdro
