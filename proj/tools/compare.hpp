#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace wdro::cli {

/// Scalar DRO comparison instance: nominal P_hat and shifted Q on one support, cost f.
struct CompareSpec {
    std::vector<double> support;
    std::vector<double> f;
    std::vector<double> p_hat;
    std::vector<double> q;
    /// f(x) = x^2, also used for a moved point. Otherwise `outlier_f` gives its cost.
    bool square_cost = false;
    std::optional<double> outlier_f;
};

/// 51 points evenly spaced on [0, 10], f(x) = x^2, P_hat and Q discretized normal
/// densities N(4, 2^2) and N(5.5, 1.5^2), renormalized on the grid.
CompareSpec generated_compare_spec();

/// JSON keys: support, p_hat, q, and f as either "square" or an array; optional outlier_f.
CompareSpec compare_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CompareSpec& s);

struct CompareRow {
    std::string scenario;  // "base" or "outlier"
    double multiplier = 0.0;
    std::string method;    // "kl" or "wasserstein"
    double epsilon = 0.0;
    double value = 0.0;
    double expected_q = 0.0;
    std::optional<double> delta;  // outlier value minus base value at the same multiplier
};

struct CompareResult {
    double expected_q = 0.0;
    double plug_in = 0.0;
    double kl_star = 0.0;  // KL(Q || P_hat)
    double w_star = 0.0;   // W(P_hat, Q)
    std::optional<double> kl_star_outlier;
    std::optional<double> w_star_outlier;
    std::vector<CompareRow> rows;
};

/// Robust values of both methods at multiplier * measured distance. With `outlier_at`,
/// the top support point of P_hat moves there at unchanged probability, the distances
/// are re-measured and the runs repeated. `tol` of 0 selects 1e-9 * max f.
CompareResult run_compare(const CompareSpec& spec, const std::vector<double>& multipliers,
                          std::optional<double> outlier_at, double tol = 0.0);

std::string compare_csv(const CompareResult& r);

}  // namespace wdro::cli
