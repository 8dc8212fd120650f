#include "wdro/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wdro/error.hpp"

namespace wdro {

namespace {

bool points_match(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k] - b[k]) > kPointTolerance) return false;
    }
    return true;
}

void require_same_support(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    if (p.support_ptr() == q.support_ptr()) return;
    if (!(p.support() == q.support())) {
        throw Error(ErrorKind::SupportMismatch, "distributions are defined on different supports");
    }
}

}  // namespace

SupportSet::SupportSet(std::vector<Point> points, std::size_t dim)
    : points_(std::move(points)), dim_(dim) {
    if (dim_ == 0) throw Error(ErrorKind::InvalidSupport, "dimension must be positive");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_[i].size() != dim_) {
            throw Error(ErrorKind::InvalidSupport,
                        "point " + std::to_string(i) + " has " + std::to_string(points_[i].size()) +
                            " coordinates, expected " + std::to_string(dim_));
        }
        for (double v : points_[i]) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::InvalidSupport, "point " + std::to_string(i) + " is not finite");
            }
        }
    }
    // Lexicographic sort exposes near-duplicates as neighbours.
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points_[a] < points_[b]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (points_match(points_[order[k - 1]], points_[order[k]])) {
            throw Error(ErrorKind::InvalidSupport, "points " + std::to_string(order[k - 1]) + " and " +
                                                       std::to_string(order[k]) + " coincide");
        }
    }
    for (std::size_t i = 0; i < points_.size(); ++i) exact_.emplace(points_[i], i);
}

SupportSet SupportSet::scalar(std::span<const double> values) {
    std::vector<Point> pts;
    pts.reserve(values.size());
    for (double v : values) pts.push_back({v});
    return SupportSet(std::move(pts), 1);
}

std::optional<std::size_t> SupportSet::find(std::span<const double> p) const {
    if (p.size() != dim_) return std::nullopt;
    if (auto it = exact_.find(Point(p.begin(), p.end())); it != exact_.end()) return it->second;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_match(points_[i], p)) return i;
    }
    return std::nullopt;
}

bool SupportSet::operator==(const SupportSet& other) const {
    if (dim_ != other.dim_ || points_.size() != other.points_.size()) return false;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!points_match(points_[i], other.points_[i])) return false;
    }
    return true;
}

double DiscreteDistribution::expectation(std::span<const double> values) const {
    if (values.size() != weights_.size()) {
        throw Error(ErrorKind::LengthMismatch, "expectation over a vector of the wrong length");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) acc += weights_[i] * values[i];
    return acc;
}

DiscreteDistribution make_distribution(SupportPtr support, std::vector<double> weights,
                                       Normalization mode) {
    if (!support) throw Error(ErrorKind::DegenerateInput, "null support");
    if (weights.size() != support->size()) {
        throw Error(ErrorKind::LengthMismatch, std::to_string(weights.size()) + " weights for " +
                                                   std::to_string(support->size()) + " points");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw Error(ErrorKind::NegativeWeight, "weight " + std::to_string(i) + " = " +
                                                       std::to_string(weights[i]));
        }
        sum += weights[i];
    }
    if (!(sum > 0.0)) throw Error(ErrorKind::NotNormalizable, "weights sum to zero");
    if (mode == Normalization::Strict && std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::NotNormalizable, "weights sum to " + std::to_string(sum));
    }
    if (sum != 1.0) {
        for (double& w : weights) w /= sum;
    }
    return DiscreteDistribution(std::move(support), std::move(weights));
}

DiscreteDistribution uniform_distribution(SupportPtr support) {
    if (!support || support->empty()) throw Error(ErrorKind::DegenerateInput, "empty support");
    const std::size_t n = support->size();
    return make_distribution(std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n)),
                             Normalization::Rescale);
}

DiscreteDistribution empirical_distribution(std::span<const Point> samples, SupportPtr support) {
    if (!support) throw Error(ErrorKind::DegenerateInput, "null support");
    std::vector<std::size_t> idx;
    idx.reserve(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        auto i = support->find(samples[s]);
        if (!i) throw Error(ErrorKind::SampleOffSupport, "sample " + std::to_string(s) + " matches no support point");
        idx.push_back(*i);
    }
    return empirical_from_indices(idx, std::move(support));
}

DiscreteDistribution empirical_from_indices(std::span<const std::size_t> indices, SupportPtr support) {
    if (!support) throw Error(ErrorKind::DegenerateInput, "null support");
    if (indices.empty()) throw Error(ErrorKind::EmptyInput, "no samples");
    std::vector<double> counts(support->size(), 0.0);
    for (std::size_t i : indices) {
        if (i >= counts.size()) throw Error(ErrorKind::SampleOffSupport, "index " + std::to_string(i) + " out of range");
        counts[i] += 1.0;
    }
    const double n = static_cast<double>(indices.size());
    for (double& c : counts) c /= n;
    return make_distribution(std::move(support), std::move(counts), Normalization::Rescale);
}

double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    require_same_support(p, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p.weight(i) - q.weight(i));
    return acc;
}

double kl_divergence(const DiscreteDistribution& q, const DiscreteDistribution& p) {
    require_same_support(p, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double qi = q.weight(i);
        if (qi == 0.0) continue;
        const double pi = p.weight(i);
        if (pi == 0.0) return std::numeric_limits<double>::infinity();
        acc += qi * std::log(qi / pi);
    }
    // Rounding can leave a tiny negative value for q == p.
    return std::max(acc, 0.0);
}

DatasetDiagnostics compute_diagnostics(std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                       std::size_t n_contexts, std::size_t n_actions) {
    DatasetDiagnostics d;
    d.n = pairs.size();
    for (const auto& pa : pairs) ++d.pair_counts[pa];
    if (d.n == 0 || n_contexts == 0 || n_actions == 0) return d;
    if (d.pair_counts.size() < n_contexts * n_actions) {
        d.min_pair_frequency = 0.0;
        return d;
    }
    std::size_t min_count = d.n;
    for (const auto& [pair, count] : d.pair_counts) min_count = std::min(min_count, count);
    d.min_pair_frequency = static_cast<double>(min_count) / static_cast<double>(d.n);
    return d;
}

}  // namespace wdro
