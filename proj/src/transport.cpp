#include "wdro/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wdro/error.hpp"
#include "wdro/rng.hpp"

namespace wdro {

double ground_cost(GroundCost cost, std::span<const double> a, std::span<const double> b) {
    switch (cost) {
        case GroundCost::SquaredEuclidean: {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double d = a[k] - b[k];
                acc += d * d;
            }
            return acc;
        }
    }
    return 0.0;
}

std::vector<double> cost_matrix(GroundCost cost, const SupportSet& from, const SupportSet& to) {
    if (from.dim() != to.dim()) {
        throw Error(ErrorKind::SupportMismatch, "supports of dimension " + std::to_string(from.dim()) +
                                                    " and " + std::to_string(to.dim()));
    }
    std::vector<double> c(from.size() * to.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        for (std::size_t j = 0; j < to.size(); ++j) c[i * to.size() + j] = ground_cost(cost, from[i], to[j]);
    }
    return c;
}

namespace {

struct Cell {
    std::size_t row;
    std::size_t col;
    double flow;
};

/// Balanced transportation problem solved by the MODI (u-v) simplex method on the
/// spanning-tree basis. Rows are supplies, columns demands.
class TransportationSimplex {
public:
    TransportationSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
        : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
          cost_(std::move(cost)) {
        cmax_ = 0.0;
        for (double c : cost_) cmax_ = std::max(cmax_, std::abs(c));
    }

    std::size_t solve() {
        northwest_corner();
        if (m_ == 1 || n_ == 1) return 0;

        const double rc_tol = 1e-12 * std::max(1.0, cmax_);
        const std::size_t max_pivots = 50 * (m_ + n_) * (m_ + n_) + 10000;
        std::size_t degenerate_streak = 0;
        std::size_t next_row = 0;
        bool bland = false;
        std::size_t pivots = 0;

        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        for (;;) {
            build_tree();
            std::size_t p = 0, q = 0;
            if (!price(rc_tol, bland, next_row, p, q)) break;
            if (++pivots > max_pivots) {
                throw Error(ErrorKind::Numerical, "transportation simplex exceeded its pivot budget");
            }
            const double theta = pivot(p, q, bland);
            if (theta <= 0.0) {
                if (++degenerate_streak > 2 * (m_ + n_)) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
        }
        return pivots;
    }

    const std::vector<Cell>& basis() const noexcept { return basis_; }

private:
    void northwest_corner() {
        std::vector<double> ra = supply_, rb = demand_;
        std::size_t i = 0, j = 0;
        basis_.reserve(m_ + n_ - 1);
        for (;;) {
            const double x = std::min(ra[i], rb[j]);
            basis_.push_back({i, j, x});
            ra[i] -= x;
            rb[j] -= x;
            if (i == m_ - 1 && j == n_ - 1) break;
            if (i == m_ - 1) {
                ++j;
            } else if (j == n_ - 1) {
                ++i;
            } else if (ra[i] <= rb[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    // Node ids: rows 0..m-1, columns m..m+n-1. Root is row 0 with u = 0.
    void build_tree() {
        const std::size_t nodes = m_ + n_;
        adj_start_.assign(nodes + 1, 0);
        for (const Cell& c : basis_) {
            ++adj_start_[c.row + 1];
            ++adj_start_[m_ + c.col + 1];
        }
        for (std::size_t k = 0; k < nodes; ++k) adj_start_[k + 1] += adj_start_[k];
        adj_.assign(adj_start_[nodes], 0);
        std::vector<std::size_t> fill(adj_start_.begin(), adj_start_.end() - 1);
        for (std::size_t e = 0; e < basis_.size(); ++e) {
            adj_[fill[basis_[e].row]++] = e;
            adj_[fill[m_ + basis_[e].col]++] = e;
        }

        parent_edge_.assign(nodes, kNone);
        depth_.assign(nodes, kNone);
        queue_.clear();
        queue_.push_back(0);
        depth_[0] = 0;
        u_[0] = 0.0;
        for (std::size_t head = 0; head < queue_.size(); ++head) {
            const std::size_t node = queue_[head];
            for (std::size_t k = adj_start_[node]; k < adj_start_[node + 1]; ++k) {
                const std::size_t e = adj_[k];
                const Cell& c = basis_[e];
                const std::size_t other = node < m_ ? m_ + c.col : c.row;
                if (depth_[other] != kNone) continue;
                depth_[other] = depth_[node] + 1;
                parent_edge_[other] = e;
                const double cij = cost_[c.row * n_ + c.col];
                if (other >= m_) {
                    v_[c.col] = cij - u_[c.row];
                } else {
                    u_[c.row] = cij - v_[c.col];
                }
                queue_.push_back(other);
            }
        }
        if (queue_.size() != nodes) {
            throw Error(ErrorKind::Numerical, "transportation basis is not a spanning tree");
        }
    }

    bool price(double rc_tol, bool bland, std::size_t& next_row, std::size_t& p, std::size_t& q) {
        if (bland) {
            for (std::size_t i = 0; i < m_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    if (cost_[i * n_ + j] - u_[i] - v_[j] < -rc_tol) {
                        p = i;
                        q = j;
                        return true;
                    }
                }
            }
            return false;
        }
        // Partial Dantzig pricing: scan rows cyclically, stop after a block once a
        // candidate has been found.
        const std::size_t block = m_ <= 64 ? m_ : std::max<std::size_t>(8, static_cast<std::size_t>(std::sqrt(static_cast<double>(m_))));
        double best = -rc_tol;
        bool found = false;
        for (std::size_t scanned = 0; scanned < m_; ++scanned) {
            const std::size_t i = (next_row + scanned) % m_;
            const double* crow = &cost_[i * n_];
            for (std::size_t j = 0; j < n_; ++j) {
                const double d = crow[j] - u_[i] - v_[j];
                if (d < best) {
                    best = d;
                    p = i;
                    q = j;
                    found = true;
                }
            }
            if (found && scanned + 1 >= block) {
                next_row = (i + 1) % m_;
                return true;
            }
        }
        return found;
    }

    // Returns the step length theta.
    double pivot(std::size_t p, std::size_t q, bool bland) {
        // Path from column node (m+q) and row node p up to their common ancestor.
        std::size_t a = m_ + q;
        std::size_t b = p;
        path_a_.clear();
        path_b_.clear();
        auto step_up = [&](std::size_t node, std::vector<std::size_t>& path) {
            const std::size_t e = parent_edge_[node];
            path.push_back(e);
            const Cell& c = basis_[e];
            return node < m_ ? m_ + c.col : c.row;
        };
        while (depth_[a] > depth_[b]) a = step_up(a, path_a_);
        while (depth_[b] > depth_[a]) b = step_up(b, path_b_);
        while (a != b) {
            a = step_up(a, path_a_);
            b = step_up(b, path_b_);
        }
        // Cycle order: entering (+), then edges from column q to the ancestor, then
        // from the ancestor down to row p. Signs alternate starting with '-'.
        cycle_.clear();
        cycle_.insert(cycle_.end(), path_a_.begin(), path_a_.end());
        cycle_.insert(cycle_.end(), path_b_.rbegin(), path_b_.rend());

        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = kNone;
        for (std::size_t k = 0; k < cycle_.size(); k += 2) {
            const std::size_t e = cycle_[k];
            const double x = basis_[e].flow;
            bool better = x < theta;
            if (!better && x == theta && bland) {
                const Cell& c = basis_[e];
                const Cell& l = basis_[leave];
                better = c.row * n_ + c.col < l.row * n_ + l.col;
            }
            if (better) {
                theta = x;
                leave = e;
            }
        }
        theta = std::max(theta, 0.0);
        for (std::size_t k = 0; k < cycle_.size(); ++k) {
            double& x = basis_[cycle_[k]].flow;
            x = (k % 2 == 0) ? std::max(0.0, x - theta) : x + theta;
        }
        basis_[leave] = Cell{p, q, theta};
        return theta;
    }

    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    std::size_t m_, n_;
    std::vector<double> supply_, demand_, cost_;
    double cmax_ = 0.0;
    std::vector<Cell> basis_;
    std::vector<double> u_, v_;
    std::vector<std::size_t> adj_start_, adj_, parent_edge_, depth_, queue_;
    std::vector<std::size_t> path_a_, path_b_, cycle_;
};

std::vector<std::size_t> positive_sorted(const DiscreteDistribution& d) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.weight(i) > 0.0) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return d.support()[a] < d.support()[b]; });
    return idx;
}

}  // namespace

TransportResult wasserstein_distance(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                     GroundCost cost) {
    if (p.size() == 0 || q.size() == 0) throw Error(ErrorKind::DegenerateInput, "empty support");
    if (p.support().dim() != q.support().dim()) {
        throw Error(ErrorKind::SupportMismatch, "supports have different dimensions");
    }
    // Zero-mass points carry no flow; sorting makes the initial northwest-corner basis
    // optimal in one dimension.
    const auto rows = positive_sorted(p);
    const auto cols = positive_sorted(q);
    const std::size_t m = rows.size(), n = cols.size();

    std::vector<double> supply(m), demand(n), c(m * n);
    for (std::size_t i = 0; i < m; ++i) supply[i] = p.weight(rows[i]);
    for (std::size_t j = 0; j < n; ++j) demand[j] = q.weight(cols[j]);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c[i * n + j] = ground_cost(cost, p.support()[rows[i]], q.support()[cols[j]]);
        }
    }

    TransportationSimplex solver(std::move(supply), std::move(demand), c);
    TransportResult result;
    result.pivots = solver.solve();
    result.plan.rows = p.size();
    result.plan.cols = q.size();
    result.plan.mass.assign(p.size() * q.size(), 0.0);
    double total = 0.0;
    for (const Cell& cell : solver.basis()) {
        if (cell.flow <= 0.0) continue;
        result.plan.mass[rows[cell.row] * q.size() + cols[cell.col]] += cell.flow;
        total += cell.flow * c[cell.row * n + cell.col];
    }
    result.distance = std::max(total, 0.0);
    return result;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_halves(std::size_t n,
                                                                           std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t first = (n + 1) / 2;
    return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first)),
            std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(first), order.end())};
}

double halves_distance(std::span<const Point> first, std::span<const Point> second, GroundCost cost) {
    if (first.empty() || second.empty()) throw Error(ErrorKind::TooFewSamples, "empty half");
    const std::size_t dim = first.front().size();
    std::vector<Point> merged;
    std::map<Point, std::size_t> seen;
    auto add = [&](const Point& pt) {
        if (pt.size() != dim) throw Error(ErrorKind::InvalidSupport, "contexts of mixed dimension");
        if (seen.emplace(pt, merged.size()).second) merged.push_back(pt);
    };
    for (const auto& pt : first) add(pt);
    for (const auto& pt : second) add(pt);
    auto support = make_support(std::move(merged), dim);
    const auto p = empirical_distribution(first, support);
    const auto q = empirical_distribution(second, support);
    return wasserstein_distance(p, q, cost).distance;
}

double split_radius_estimate(std::span<const Point> contexts, std::uint64_t seed, GroundCost cost) {
    if (contexts.size() < 4) {
        throw Error(ErrorKind::TooFewSamples, "need at least 4 contexts, got " + std::to_string(contexts.size()));
    }
    const auto [a, b] = split_halves(contexts.size(), seed);
    std::vector<Point> first, second;
    for (std::size_t i : a) first.push_back(contexts[i]);
    for (std::size_t i : b) second.push_back(contexts[i]);
    return halves_distance(first, second, cost);
}

}  // namespace wdro
