#include "wdro/opl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wdro/error.hpp"
#include "wdro/parallel.hpp"
#include "wdro/transport.hpp"

namespace wdro {

namespace {

constexpr double kFeasSlack = 1e-9;

std::size_t width(const PolicyParams& p) { return p.n_actions - 1; }

std::size_t group_of(const PolicyParams& p, std::size_t context) {
    if (context >= p.grouping.size()) {
        throw Error(ErrorKind::UnknownContext, "context " + std::to_string(context) + " has no group");
    }
    return p.grouping[context];
}

void check_shape(const PolicyParams& p, const RobustCostTable& table) {
    if (table.m_hat.size() != table.n_contexts * table.n_actions || table.m_hat.empty()) {
        throw Error(ErrorKind::IncompleteTable, "table does not cover every pair");
    }
    if (p.n_contexts() != table.n_contexts || p.n_actions != table.n_actions) {
        throw Error(ErrorKind::PolicyContextMismatch, "policy parameters and table differ in shape");
    }
}

// Projection of v onto the probability simplex (sort-based).
void project_simplex(std::span<double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) tau = t;
    }
    for (double& x : v) x = std::max(x - tau, 0.0);
}

// l(theta, z) and its gradient restricted to z's group block.
double local_cost(const PolicyParams& p, const RobustCostTable& table, std::size_t z, std::span<double> grad) {
    const std::vector<double> probs = policy_probs(p, z);
    const std::size_t na = p.n_actions;
    double l = 0.0;
    for (std::size_t a = 0; a < na; ++a) l += probs[a] * table(z, a);
    for (std::size_t i = 0; i + 1 < na; ++i) {
        grad[i] = p.parameterization == Parameterization::GroupProbClamp ? table(z, i) - table(z, na - 1)
                                                                         : probs[i] * (table(z, i) - l);
    }
    return l;
}

struct CostCache {
    std::vector<double> l;
    std::vector<double> grad;  // n_contexts x width
};

CostCache all_costs(const PolicyParams& p, const RobustCostTable& table) {
    const std::size_t n = table.n_contexts, w = width(p);
    CostCache c{std::vector<double>(n), std::vector<double>(n * w)};
    for (std::size_t z = 0; z < n; ++z) c.l[z] = local_cost(p, table, z, std::span<double>(c.grad).subspan(z * w, w));
    return c;
}

void check_smoothing(double epsilon_x, double eta, double lambda) {
    if (!(epsilon_x >= 0.0)) throw Error(ErrorKind::NegativeEpsilon, "epsilon_x must be non-negative");
    if (!(eta > 0.0)) throw Error(ErrorKind::NonPositiveEta, "eta must be positive");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::NegativeLambda, "lambda must be non-negative");
}

}  // namespace

std::vector<std::size_t> identity_grouping(std::size_t n_contexts) {
    std::vector<std::size_t> g(n_contexts);
    std::iota(g.begin(), g.end(), std::size_t{0});
    return g;
}

PolicyParams make_params(std::vector<std::size_t> grouping, std::size_t n_actions, Parameterization param,
                         std::vector<double> theta) {
    if (grouping.empty()) throw Error(ErrorKind::InvalidConfig, "grouping is empty");
    if (n_actions == 0) throw Error(ErrorKind::InvalidConfig, "no actions");
    PolicyParams p;
    p.n_groups = *std::max_element(grouping.begin(), grouping.end()) + 1;
    p.grouping = std::move(grouping);
    p.n_actions = n_actions;
    p.parameterization = param;
    const std::size_t dim = p.n_groups * (n_actions - 1);
    if (theta.empty()) {
        const double init = param == Parameterization::GroupProbClamp ? 1.0 / static_cast<double>(n_actions) : 0.0;
        theta.assign(dim, init);
    }
    if (theta.size() != dim) {
        throw Error(ErrorKind::InvalidConfig,
                    "theta has " + std::to_string(theta.size()) + " entries, expected " + std::to_string(dim));
    }
    for (double t : theta) {
        if (!std::isfinite(t)) throw Error(ErrorKind::InvalidConfig, "theta must be finite");
    }
    p.theta = std::move(theta);
    return p;
}

std::vector<double> policy_probs(const PolicyParams& p, std::size_t context) {
    const std::size_t g = group_of(p, context), w = width(p);
    const double* th = p.theta.data() + g * w;
    std::vector<double> probs(p.n_actions);
    if (p.parameterization == Parameterization::GroupProbClamp) {
        double sum = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            if (th[i] < -kFeasSlack) throw Error(ErrorKind::InvalidConfig, "probability parameter below zero");
            probs[i] = std::max(th[i], 0.0);
            sum += probs[i];
        }
        if (sum > 1.0 + kFeasSlack) throw Error(ErrorKind::InvalidConfig, "group probabilities exceed one");
        probs[w] = std::max(1.0 - sum, 0.0);
        return probs;
    }
    double top = 0.0;
    for (std::size_t i = 0; i < w; ++i) top = std::max(top, th[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < w; ++i) sum += probs[i] = std::exp(th[i] - top);
    sum += probs[w] = std::exp(-top);
    for (double& q : probs) q /= sum;
    return probs;
}

Policy to_policy(const PolicyParams& p) {
    std::vector<std::vector<double>> rows;
    rows.reserve(p.n_contexts());
    for (std::size_t x = 0; x < p.n_contexts(); ++x) rows.push_back(policy_probs(p, x));
    return make_policy(std::move(rows));
}

void project(PolicyParams& p) {
    if (p.parameterization == Parameterization::GroupSoftmax) return;
    const std::size_t w = width(p);
    for (std::size_t g = 0; g < p.n_groups; ++g) {
        std::span<double> block(p.theta.data() + g * w, w);
        double sum = 0.0;
        for (double& t : block) sum += t = std::max(t, 0.0);
        if (sum > 1.0 + 1e-12) project_simplex(block);
    }
}

ValueGradient robust_policy_cost(const PolicyParams& p, const RobustCostTable& table, std::size_t context) {
    check_shape(p, table);
    const std::size_t g = group_of(p, context), w = width(p);
    ValueGradient out{0.0, std::vector<double>(p.dim(), 0.0)};
    out.value = local_cost(p, table, context, std::span<double>(out.gradient).subspan(g * w, w));
    return out;
}

ObjectiveGradient smoothed_objective(const PolicyParams& p, double lambda, const RobustCostTable& table,
                                     const DiscreteDistribution& ctx, double epsilon_x, double eta) {
    check_shape(p, table);
    check_smoothing(epsilon_x, eta, lambda);
    if (ctx.size() != table.n_contexts) throw Error(ErrorKind::PolicyContextMismatch, "context support differs from the table");
    const std::size_t n = ctx.size(), w = width(p);
    const CostCache cache = all_costs(p, table);
    ObjectiveGradient out{0.0, std::vector<double>(p.dim(), 0.0), 0.0};
    std::vector<double> v(n), c(n);
    for (std::size_t x = 0; x < n; ++x) {
        const double px = ctx.weight(x);
        if (px <= 0.0) continue;
        for (std::size_t z = 0; z < n; ++z) {
            c[z] = ground_cost(GroundCost::SquaredEuclidean, ctx.support()[x], ctx.support()[z]);
            v[z] = cache.l[z] - lambda * c[z];
        }
        const double top = *std::max_element(v.begin(), v.end());
        double sum = 0.0;
        for (std::size_t z = 0; z < n; ++z) sum += v[z] = std::exp(eta * (v[z] - top));
        out.value += px * (top + std::log(sum / static_cast<double>(n)) / eta);
        for (std::size_t z = 0; z < n; ++z) {
            const double wz = px * v[z] / sum;
            out.grad_lambda -= wz * c[z];
            const std::size_t g = p.grouping[z];
            for (std::size_t i = 0; i < w; ++i) out.grad_theta[g * w + i] += wz * cache.grad[z * w + i];
        }
    }
    out.value += epsilon_x * lambda;
    out.grad_lambda += epsilon_x;
    return out;
}

ObjectiveGradient sampled_gradient(const PolicyParams& p, double lambda, const RobustCostTable& table,
                                   const SupportSet& contexts, std::size_t x, std::span<const std::size_t> zetas,
                                   double epsilon_x, double eta) {
    check_smoothing(epsilon_x, eta, lambda);
    if (zetas.empty()) throw Error(ErrorKind::InvalidConfig, "empty inner batch");
    if (x >= contexts.size()) throw Error(ErrorKind::UnknownContext, "nominal context out of range");
    const std::size_t m = zetas.size(), w = width(p);
    std::vector<double> l(m), c(m), grad(m * w);
    for (std::size_t j = 0; j < m; ++j) {
        if (zetas[j] >= contexts.size()) throw Error(ErrorKind::UnknownContext, "inner point out of range");
        l[j] = local_cost(p, table, zetas[j], std::span<double>(grad).subspan(j * w, w));
        c[j] = ground_cost(GroundCost::SquaredEuclidean, contexts[x], contexts[zetas[j]]);
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) top = std::max(top, l[j] - lambda * c[j]);
    std::vector<double> g(m);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum += g[j] = std::exp(eta * (l[j] - lambda * c[j] - top));

    ObjectiveGradient out{0.0, std::vector<double>(p.dim(), 0.0), epsilon_x};
    for (std::size_t j = 0; j < m; ++j) {
        const double wj = g[j] / sum;
        out.grad_lambda -= wj * c[j];
        const std::size_t grp = p.grouping[zetas[j]];
        for (std::size_t i = 0; i < w; ++i) out.grad_theta[grp * w + i] += wj * grad[j * w + i];
    }
    out.value = top + std::log(sum / static_cast<double>(m)) / eta + epsilon_x * lambda;
    return out;
}

LearnResult bsgd_learn(const RobustCostTable& table, const DiscreteDistribution& ctx, const PolicyParams& init,
                       const BsgdConfig& cfg) {
    check_shape(init, table);
    if (ctx.size() != table.n_contexts) throw Error(ErrorKind::PolicyContextMismatch, "context support differs from the table");
    if (cfg.iterations == 0) throw Error(ErrorKind::InvalidConfig, "iterations must be at least 1");
    if (cfg.inner_batch == 0) throw Error(ErrorKind::InvalidConfig, "inner batch must be at least 1");
    if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) throw Error(ErrorKind::InvalidConfig, "step size must be positive");
    if (!(cfg.eta > 0.0)) throw Error(ErrorKind::InvalidConfig, "eta must be positive");
    if (!(cfg.epsilon_x >= 0.0)) throw Error(ErrorKind::InvalidConfig, "epsilon_x must be non-negative");
    if (!(cfg.lambda0 >= 0.0) || !(cfg.lambda_cap >= 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda bounds must be non-negative");

    const double cap = cfg.lambda_cap > 0.0 ? cfg.lambda_cap
                       : cfg.epsilon_x > 0.0 ? table.y_max / cfg.epsilon_x
                                             : std::numeric_limits<double>::infinity();
    const double gamma =
        cfg.schedule == StepSchedule::Constant ? cfg.step : cfg.step / std::sqrt(static_cast<double>(cfg.iterations));

    LearnResult out{init, std::clamp(cfg.lambda0, 0.0, cap), {}};
    project(out.params);
    if (cfg.record_trace) out.trace.reserve(cfg.iterations);

    Rng rng(cfg.seed);
    const CategoricalSampler pick(ctx.weights());
    const std::size_t n = ctx.size();
    std::vector<std::size_t> zetas(cfg.inner_batch);
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        const std::size_t x = pick(rng);
        for (auto& z : zetas) z = rng.uniform_index(n);
        const auto g = sampled_gradient(out.params, out.lambda, table, ctx.support(), x, zetas, cfg.epsilon_x, cfg.eta);
        if (cfg.record_trace) out.trace.push_back({t, out.params.theta, out.lambda, x, g.value});
        for (std::size_t i = 0; i < out.params.dim(); ++i) out.params.theta[i] -= gamma * g.grad_theta[i];
        project(out.params);
        out.lambda = std::clamp(out.lambda - gamma * g.grad_lambda, 0.0, cap);
    }
    return out;
}

GridResult exact_opl(const RobustCostTable& table, const DiscreteDistribution& ctx, double epsilon_x,
                     const MethodSpec& method, const PolicyParams& shape, const GridOptions& opt) {
    check_shape(shape, table);
    const std::size_t dim = shape.dim();
    if (dim > 3) throw Error(ErrorKind::DimensionTooLarge, std::to_string(dim) + " parameters; grid search supports at most 3");
    if (opt.resolution < 2) throw Error(ErrorKind::InvalidConfig, "grid resolution must be at least 2");
    const std::size_t r = opt.resolution;
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) total *= r;

    const bool clamp = shape.parameterization == Parameterization::GroupProbClamp;
    auto coordinate = [&](std::size_t k) {
        const double u = static_cast<double>(k) / static_cast<double>(r - 1);
        return clamp ? u : -opt.logit_bound + 2.0 * opt.logit_bound * u;
    };
    auto point = [&](std::size_t idx) {
        std::vector<double> theta(dim);
        // Lexicographic order: the first coordinate varies slowest.
        for (std::size_t d = dim; d-- > 0;) {
            theta[d] = coordinate(idx % r);
            idx /= r;
        }
        return theta;
    };
    auto feasible = [&](const std::vector<double>& theta) {
        if (!clamp) return true;
        const std::size_t w = width(shape);
        for (std::size_t g = 0; g < shape.n_groups; ++g) {
            double s = 0.0;
            for (std::size_t i = 0; i < w; ++i) s += theta[g * w + i];
            if (s > 1.0 + 1e-12) return false;
        }
        return true;
    };

    const double tol = opt.tol > 0.0 ? opt.tol : 1e-9 * (table.y_max > 0.0 ? table.y_max : 1.0);
    std::vector<double> values(total, std::numeric_limits<double>::quiet_NaN());
    parallel_for(total, opt.threads, [&](std::size_t idx) {
        auto theta = point(idx);
        if (!feasible(theta)) return;
        PolicyParams p = shape;
        p.theta = std::move(theta);
        values[idx] = evaluate_policy(to_policy(p), table, ctx, epsilon_x, method, tol).value;
    });

    double best = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        ++evaluated;
        best = std::min(best, v);
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (!std::isnan(values[idx]) && values[idx] <= best + tol) {
            GridResult res{shape, values[idx], evaluated};
            res.params.theta = point(idx);
            return res;
        }
    }
    throw Error(ErrorKind::Numerical, "no feasible grid point");
}

}  // namespace wdro
