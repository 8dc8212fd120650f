#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace wdro {

using Point = std::vector<double>;

/// Coordinate tolerance used when matching a point against a support.
inline constexpr double kPointTolerance = 1e-12;

/// Ordered, duplicate-free list of points in R^dim. Index i always names the same point.
class SupportSet {
public:
    /// Throws InvalidSupport if dim == 0, a point has the wrong arity, or two points coincide.
    SupportSet(std::vector<Point> points, std::size_t dim);

    /// Convenience for one-dimensional supports.
    static SupportSet scalar(std::span<const double> values);

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return points_.empty(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Point>& points() const noexcept { return points_; }

    /// Index of the point matching `p` coordinate-wise within kPointTolerance.
    std::optional<std::size_t> find(std::span<const double> p) const;

    bool operator==(const SupportSet& other) const;

private:
    std::vector<Point> points_;
    std::size_t dim_;
    std::map<Point, std::size_t> exact_;
};

using SupportPtr = std::shared_ptr<const SupportSet>;

inline SupportPtr make_support(std::vector<Point> points, std::size_t dim) {
    return std::make_shared<const SupportSet>(std::move(points), dim);
}

enum class Normalization {
    /// Accept sums within 1e-9 of one and rescale them; reject anything else.
    Strict,
    /// Divide by the (positive) sum, whatever it is.
    Rescale,
};

/// Weighted point masses on a finite support. Weights are non-negative and sum to one.
/// Zero-weight points stay in the support.
class DiscreteDistribution {
public:
    const SupportSet& support() const noexcept { return *support_; }
    const SupportPtr& support_ptr() const noexcept { return support_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::size_t size() const noexcept { return weights_.size(); }

    /// Expectation of values indexed like the support.
    double expectation(std::span<const double> values) const;

private:
    friend DiscreteDistribution make_distribution(SupportPtr, std::vector<double>, Normalization);
    DiscreteDistribution(SupportPtr support, std::vector<double> weights)
        : support_(std::move(support)), weights_(std::move(weights)) {}

    SupportPtr support_;
    std::vector<double> weights_;
};

DiscreteDistribution make_distribution(SupportPtr support, std::vector<double> weights,
                                       Normalization mode = Normalization::Strict);

DiscreteDistribution uniform_distribution(SupportPtr support);

/// Empirical frequencies of `samples` over `support`; unobserved points keep weight zero.
DiscreteDistribution empirical_distribution(std::span<const Point> samples, SupportPtr support);

/// Same as above for samples already expressed as support indices.
DiscreteDistribution empirical_from_indices(std::span<const std::size_t> indices, SupportPtr support);

/// Sum of absolute weight differences, in [0, 2] (twice the usual total variation).
double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// KL(q || p) with 0 log 0 = 0. Infinite when q charges a point p does not.
double kl_divergence(const DiscreteDistribution& q, const DiscreteDistribution& p);

/// Counts of logged (context, action) pairs.
struct DatasetDiagnostics {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_counts;
    std::size_t n = 0;
    /// Smallest count/n over every pair of the declared grid; zero if any pair is unobserved.
    double min_pair_frequency = 0.0;
};

DatasetDiagnostics compute_diagnostics(
    std::span<const std::pair<std::size_t, std::size_t>> pairs, std::size_t n_contexts,
    std::size_t n_actions);

}  // namespace wdro
