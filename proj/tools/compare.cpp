#include "compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wdro/dual.hpp"
#include "wdro/error.hpp"
#include "wdro/io.hpp"
#include "wdro/transport.hpp"

namespace wdro::cli {

using nlohmann::json;

namespace {

std::vector<double> normal_on(const std::vector<double>& xs, double mean, double sd) {
    std::vector<double> w;
    double s = 0.0;
    for (double x : xs) s += w.emplace_back(std::exp(-(x - mean) * (x - mean) / (2 * sd * sd)));
    for (auto& v : w) v /= s;
    return w;
}

struct Instance {
    SupportPtr support;
    DiscreteDistribution p;
    CostVector f;
};

Instance instance(const std::vector<double>& xs, const std::vector<double>& w, std::vector<double> f) {
    auto s = std::make_shared<const SupportSet>(SupportSet::scalar(xs));
    return {s, make_distribution(s, w, Normalization::Rescale), make_cost_vector(s, std::move(f))};
}

/// An infinite KL radius admits every law absolutely continuous w.r.t. P: the value is the
/// largest cost on P's support.
double kl_value(const Instance& inst, double eps, double tol) {
    if (std::isfinite(eps)) return kl_dual_solve(inst.p, inst.f, eps, tol).value;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inst.p.size(); ++i)
        if (inst.p.weight(i) > 0.0) top = std::max(top, inst.f.values[i]);
    return top;
}

}  // namespace

CompareSpec generated_compare_spec() {
    CompareSpec s;
    for (int i = 0; i <= 50; ++i) s.support.push_back(0.2 * i);
    for (double x : s.support) s.f.push_back(x * x);
    s.p_hat = normal_on(s.support, 4.0, 2.0);
    s.q = normal_on(s.support, 5.5, 1.5);
    s.square_cost = true;
    return s;
}

CompareSpec compare_spec_from_json(const json& j) {
    CompareSpec s;
    try {
        s.support = j.at("support").get<std::vector<double>>();
        s.p_hat = j.at("p_hat").get<std::vector<double>>();
        s.q = j.at("q").get<std::vector<double>>();
        const auto& f = j.at("f");
        if (f.is_string()) {
            if (f.get<std::string>() != "square") throw Error(ErrorKind::InvalidConfig, "f must be \"square\" or an array");
            s.square_cost = true;
            for (double x : s.support) s.f.push_back(x * x);
        } else {
            s.f = f.get<std::vector<double>>();
        }
        if (j.contains("outlier_f")) s.outlier_f = j.at("outlier_f").get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("compare spec: ") + e.what());
    }
    const auto n = s.support.size();
    if (n == 0 || s.f.size() != n || s.p_hat.size() != n || s.q.size() != n)
        throw Error(ErrorKind::LengthMismatch, "compare spec arrays must share the support length");
    return s;
}

json to_json(const CompareSpec& s) {
    json j = {{"support", s.support}, {"p_hat", s.p_hat}, {"q", s.q}};
    if (s.square_cost)
        j["f"] = "square";
    else
        j["f"] = s.f;
    if (s.outlier_f) j["outlier_f"] = *s.outlier_f;
    return j;
}

CompareResult run_compare(const CompareSpec& spec, const std::vector<double>& multipliers,
                          std::optional<double> outlier_at, double tol) {
    for (double m : multipliers)
        if (!(m >= 0.0) || !std::isfinite(m)) throw Error(ErrorKind::NegativeEpsilon, "radius multipliers must be >= 0");

    auto base = instance(spec.support, spec.p_hat, spec.f);
    auto q = make_distribution(base.support, spec.q, Normalization::Rescale);
    if (tol == 0.0) tol = 1e-9 * std::max(std::abs(base.f.f_max), 1.0);

    CompareResult r;
    r.expected_q = q.expectation(spec.f);
    r.plug_in = base.p.expectation(spec.f);
    r.kl_star = kl_divergence(q, base.p);
    r.w_star = wasserstein_distance(base.p, q).distance;

    auto run = [&](const Instance& inst, const std::string& scenario, double kl_star, double w_star,
                   const std::vector<CompareRow>* reference) {
        for (std::size_t k = 0; k < multipliers.size(); ++k) {
            const double m = multipliers[k];
            const double kl_eps = m == 0.0 ? 0.0 : m * kl_star;
            CompareRow kl{scenario, m, "kl", kl_eps, kl_value(inst, kl_eps, tol), r.expected_q, std::nullopt};
            CompareRow w{scenario, m, "wasserstein", m * w_star,
                         wasserstein_dual_solve(inst.p, inst.f, m * w_star, GroundCost::SquaredEuclidean, tol).value,
                         r.expected_q, std::nullopt};
            if (reference) {
                kl.delta = kl.value - (*reference)[2 * k].value;
                w.delta = w.value - (*reference)[2 * k + 1].value;
            }
            r.rows.push_back(kl);
            r.rows.push_back(w);
        }
    };
    run(base, "base", r.kl_star, r.w_star, nullptr);

    if (outlier_at) {
        const auto top = static_cast<std::size_t>(
            std::max_element(spec.support.begin(), spec.support.end()) - spec.support.begin());
        auto xs = spec.support;
        auto f = spec.f;
        xs[top] = *outlier_at;
        if (spec.square_cost)
            f[top] = *outlier_at * *outlier_at;
        else if (spec.outlier_f)
            f[top] = *spec.outlier_f;
        else
            throw Error(ErrorKind::InvalidConfig, "outlier shift needs f = \"square\" or outlier_f");
        auto moved = instance(xs, spec.p_hat, f);
        // Points are identified by index for KL, so only the geometry changes.
        auto q_moved = make_distribution(moved.support, spec.q, Normalization::Rescale);
        r.kl_star_outlier = kl_divergence(q_moved, moved.p);
        r.w_star_outlier = wasserstein_distance(moved.p, q).distance;
        const std::vector<CompareRow> base_rows = r.rows;
        run(moved, "outlier", *r.kl_star_outlier, *r.w_star_outlier, &base_rows);
    }
    return r;
}

std::string compare_csv(const CompareResult& r) {
    std::ostringstream os;
    os << "scenario,multiplier,method,epsilon,value,expected_q,delta\n";
    for (const auto& row : r.rows)
        os << row.scenario << ',' << format_real(row.multiplier) << ',' << row.method << ','
           << format_real(row.epsilon) << ',' << format_real(row.value) << ',' << format_real(row.expected_q) << ','
           << (row.delta ? format_real(*row.delta) : "") << '\n';
    return os.str();
}

}  // namespace wdro::cli
