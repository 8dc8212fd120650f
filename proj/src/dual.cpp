#include "wdro/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wdro/error.hpp"
#include "wdro/golden.hpp"
#include "wdro/lp.hpp"

namespace wdro {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// P0 restricted to its charged points, with the transport cost to every candidate.
struct DualInstance {
    std::vector<double> weight;       // per charged point
    std::vector<std::size_t> self;    // index of the point itself in f's support
    std::vector<double> cost;         // rows x |f|
    std::size_t cols = 0;
    double cmax = 0.0;
};

DualInstance build_instance(const DiscreteDistribution& p0, const CostVector& f, GroundCost cost) {
    if (!f.support) throw Error(ErrorKind::DegenerateInput, "cost vector without support");
    if (f.values.empty()) throw Error(ErrorKind::EmptyInput, "empty cost vector");
    if (p0.support().dim() != f.support->dim()) {
        throw Error(ErrorKind::SupportMismatch, "nominal distribution and cost vector differ in dimension");
    }
    DualInstance inst;
    inst.cols = f.values.size();
    for (std::size_t i = 0; i < p0.size(); ++i) {
        if (p0.weight(i) <= 0.0) continue;
        const Point& x = p0.support()[i];
        std::size_t self;
        if (p0.support_ptr() == f.support) {
            self = i;
        } else {
            auto found = f.support->find(x);
            if (!found) {
                throw Error(ErrorKind::SupportMismatch,
                            "nominal point " + std::to_string(i) + " is not in the cost support");
            }
            self = *found;
        }
        inst.weight.push_back(p0.weight(i));
        inst.self.push_back(self);
        for (std::size_t j = 0; j < inst.cols; ++j) {
            const double c = ground_cost(cost, x, (*f.support)[j]);
            inst.cost.push_back(c);
            inst.cmax = std::max(inst.cmax, c);
        }
    }
    return inst;
}

double plug_in(const DualInstance& inst, const CostVector& f) {
    double acc = 0.0;
    for (std::size_t r = 0; r < inst.weight.size(); ++r) acc += inst.weight[r] * f.values[inst.self[r]];
    return acc;
}

double exact_objective(const DualInstance& inst, const CostVector& f, double lambda, double epsilon) {
    double acc = 0.0;
    for (std::size_t r = 0; r < inst.weight.size(); ++r) {
        const double* c = &inst.cost[r * inst.cols];
        double best = -kInf;
        for (std::size_t j = 0; j < inst.cols; ++j) best = std::max(best, f.values[j] - lambda * c[j]);
        acc += inst.weight[r] * best;
    }
    return epsilon * lambda + acc;
}

double smoothed_objective(const DualInstance& inst, const CostVector& f, double lambda, double epsilon,
                          double eta, std::vector<double>& scratch) {
    scratch.resize(inst.cols);
    double acc = 0.0;
    for (std::size_t r = 0; r < inst.weight.size(); ++r) {
        const double* c = &inst.cost[r * inst.cols];
        for (std::size_t j = 0; j < inst.cols; ++j) scratch[j] = f.values[j] - lambda * c[j];
        acc += inst.weight[r] * lse(scratch, eta);
    }
    return epsilon * lambda + acc;
}

void check_common(double epsilon, double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw Error(ErrorKind::InvalidTolerance, "tolerance must be positive");
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::NegativeEpsilon, "radius must be non-negative");
}

DualSolution shortcut(const DualInstance& inst, const CostVector& f) {
    DualSolution s;
    s.value = plug_in(inst, f);
    s.lambda_star = kInf;
    s.bracket_lo = 0.0;
    s.bracket_hi = kInf;
    s.non_robust_shortcut = true;
    return s;
}

}  // namespace

CostVector make_cost_vector(SupportPtr support, std::vector<double> values) {
    if (!support) throw Error(ErrorKind::DegenerateInput, "null support");
    if (values.size() != support->size()) {
        throw Error(ErrorKind::LengthMismatch, std::to_string(values.size()) + " costs for " +
                                                   std::to_string(support->size()) + " points");
    }
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "empty cost vector");
    CostVector f{std::move(support), std::move(values), -kInf, kInf};
    for (double v : f.values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidConfig, "cost values must be finite");
        f.f_max = std::max(f.f_max, v);
        f.f_min = std::min(f.f_min, v);
    }
    return f;
}

double default_tolerance(const CostVector& f) {
    const double scale = std::max(std::abs(f.f_max), std::abs(f.f_min));
    return 1e-9 * (scale > 0.0 ? scale : 1.0);
}

double dual_objective(double lambda, const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                      GroundCost cost) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::NegativeLambda, "lambda must be non-negative");
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::NegativeEpsilon, "radius must be non-negative");
    const auto inst = build_instance(p0, f, cost);
    return exact_objective(inst, f, lambda, epsilon);
}

DualSolution wasserstein_dual_solve(const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                                    GroundCost cost, double tol) {
    check_common(epsilon, tol);
    const auto inst = build_instance(p0, f, cost);
    if (epsilon == 0.0) return shortcut(inst, f);

    DualSolution s;
    s.bracket_lo = 0.0;
    s.bracket_hi = (f.f_max - f.f_min) / epsilon;
    // |d/dlambda| <= max(eps, cmax), so a bracket of width tol/L bounds the value error by tol.
    const double slope = std::max({epsilon, inst.cmax, 1e-300});
    auto g = golden_section_minimize([&](double l) { return exact_objective(inst, f, l, epsilon); },
                                     s.bracket_lo, s.bracket_hi, tol / slope);
    s.lambda_star = g.x;
    // The exact minimum lies in [E_P0 f, f_max]; clamp away summation rounding.
    s.value = std::clamp(g.fx, plug_in(inst, f), f.f_max);
    s.iterations = g.iterations;
    return s;
}

double primal_oracle(const DiscreteDistribution& p0, const CostVector& f, double epsilon, GroundCost cost) {
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::NegativeEpsilon, "radius must be non-negative");
    if (p0.size() * f.values.size() > 1'000'000) {
        throw Error(ErrorKind::InstanceTooLarge, "primal oracle limited to 1e6 transport cells");
    }
    const auto inst = build_instance(p0, f, cost);
    const std::size_t rows = inst.weight.size();
    lp::Problem problem(rows + 1);
    for (std::size_t r = 0; r < rows; ++r) problem.set_row(r, lp::Sense::Equal, inst.weight[r]);
    problem.set_row(rows, lp::Sense::LessEqual, epsilon);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < inst.cols; ++j) {
            const double c = inst.cost[r * inst.cols + j];
            std::vector<std::pair<std::size_t, double>> entries{{r, 1.0}};
            if (c != 0.0) entries.emplace_back(rows, c);
            problem.add_column(f.values[j], std::move(entries));
        }
    }
    const auto sol = lp::maximize(problem);
    if (sol.status != lp::Status::Optimal) {
        throw Error(ErrorKind::Numerical, "primal transport LP did not reach an optimum");
    }
    return sol.objective;
}

double lse(std::span<const double> values, double eta) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "lse of an empty vector");
    if (!(eta > 0.0)) throw Error(ErrorKind::NonPositiveEta, "eta must be positive");
    const double vmax = *std::max_element(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += std::exp(eta * (v - vmax));
    return vmax + std::log(acc / static_cast<double>(values.size())) / eta;
}

DualSolution regularized_dual_solve(const DiscreteDistribution& p0, const CostVector& f, double epsilon,
                                    GroundCost cost, const SmoothingConfig& smoothing, double tol) {
    check_common(epsilon, tol);
    if (!(smoothing.eta > 0.0)) throw Error(ErrorKind::NonPositiveEta, "eta must be positive");
    const auto inst = build_instance(p0, f, cost);
    if (epsilon == 0.0) return shortcut(inst, f);

    // obj(lambda) >= eps*lambda + f_min - log(n)/eta and obj(0) <= f_max bound the minimizer.
    const double n = static_cast<double>(inst.cols);
    DualSolution s;
    s.bracket_lo = 0.0;
    s.bracket_hi = (f.f_max - f.f_min + std::log(n) / smoothing.eta) / epsilon;
    const double slope = std::max({epsilon, inst.cmax, 1e-300});
    std::vector<double> scratch;
    auto g = golden_section_minimize(
        [&](double l) { return smoothed_objective(inst, f, l, epsilon, smoothing.eta, scratch); },
        s.bracket_lo, s.bracket_hi, tol / slope);
    s.lambda_star = g.x;
    s.value = std::min(g.fx, f.f_max);
    s.iterations = g.iterations;
    return s;
}

DualSolution kl_dual_solve(const DiscreteDistribution& p0, const CostVector& f, double epsilon, double tol) {
    check_common(epsilon, tol);
    // KL balls never leave P0's support, so only charged points matter.
    const auto inst = build_instance(p0, f, GroundCost::SquaredEuclidean);
    if (epsilon == 0.0) return shortcut(inst, f);

    double fmax = -kInf, fmin = kInf, pmin = 1.0;
    for (std::size_t r = 0; r < inst.weight.size(); ++r) {
        const double v = f.values[inst.self[r]];
        fmax = std::max(fmax, v);
        fmin = std::min(fmin, v);
        pmin = std::min(pmin, inst.weight[r]);
    }
    DualSolution s;
    const double spread = fmax - fmin;
    if (!(spread > 0.0)) {
        s.value = fmax;
        return s;
    }
    s.bracket_lo = 1e-6 * spread;
    s.bracket_hi = 1e3 * spread;
    auto h = [&](double lambda) {
        double acc = 0.0;
        for (std::size_t r = 0; r < inst.weight.size(); ++r) {
            acc += inst.weight[r] * std::exp((f.values[inst.self[r]] - fmax) / lambda);
        }
        return epsilon * lambda + lambda * std::log(acc) + fmax;
    };
    // Search in log(lambda); |dh/du| <= lambda_hi * max(eps, log(1/p_min)).
    const double slope = s.bracket_hi * std::max(epsilon, std::log(1.0 / pmin)) + 1e-300;
    auto g = golden_section_minimize([&](double u) { return h(std::exp(u)); }, std::log(s.bracket_lo),
                                     std::log(s.bracket_hi), tol / slope);
    s.iterations = g.iterations;
    if (g.fx >= fmax) {
        // The lambda -> 0 limit is the largest charged cost.
        s.value = fmax;
        s.lambda_star = 0.0;
    } else {
        s.value = g.fx;
        s.lambda_star = std::exp(g.x);
    }
    return s;
}

}  // namespace wdro
