#include "wdro/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wdro/error.hpp"

namespace wdro::lp {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kPivotTol = 1e-11;
constexpr std::size_t kRefactorEvery = 64;

struct Column {
    std::vector<std::pair<std::size_t, double>> entries;
    bool artificial = false;
};

class RevisedSimplex {
public:
    explicit RevisedSimplex(const Problem& problem) : r_(problem.rows()), structural_(problem.cols()) {
        b_.resize(r_);
        std::vector<double> sign(r_, 1.0);
        std::vector<Sense> sense(r_);
        for (std::size_t i = 0; i < r_; ++i) {
            b_[i] = problem.rhs(i);
            sense[i] = problem.sense(i);
            if (b_[i] < 0.0) {
                sign[i] = -1.0;
                b_[i] = -b_[i];
                if (sense[i] == Sense::LessEqual) {
                    sense[i] = Sense::GreaterEqual;
                } else if (sense[i] == Sense::GreaterEqual) {
                    sense[i] = Sense::LessEqual;
                }
            }
        }
        for (std::size_t j = 0; j < structural_; ++j) {
            Column col;
            for (auto [row, v] : problem.column(j)) {
                if (row >= r_) throw Error(ErrorKind::InvalidConfig, "LP column refers to a missing row");
                if (v != 0.0) col.entries.emplace_back(row, v * sign[row]);
            }
            cols_.push_back(std::move(col));
            cost_.push_back(problem.objective(j));
        }
        basis_.assign(r_, kNone);
        for (std::size_t i = 0; i < r_; ++i) {
            if (sense[i] == Sense::Equal) continue;
            Column slack;
            slack.entries.emplace_back(i, sense[i] == Sense::LessEqual ? 1.0 : -1.0);
            cols_.push_back(std::move(slack));
            cost_.push_back(0.0);
            if (sense[i] == Sense::LessEqual) basis_[i] = cols_.size() - 1;
        }
        for (std::size_t i = 0; i < r_; ++i) {
            if (basis_[i] != kNone) continue;
            Column art;
            art.entries.emplace_back(i, 1.0);
            art.artificial = true;
            cols_.push_back(std::move(art));
            cost_.push_back(0.0);
            basis_[i] = cols_.size() - 1;
        }
        in_basis_.assign(cols_.size(), false);
        for (std::size_t j : basis_) in_basis_[j] = true;
        cmax_ = 1.0;
        for (double c : cost_) cmax_ = std::max(cmax_, std::abs(c));
        bmax_ = 1.0;
        for (double v : b_) bmax_ = std::max(bmax_, v);
    }

    Solution run() {
        Solution sol;
        refactor();

        // Phase 1: maximize -sum(artificials).
        bool any_artificial = false;
        phase_cost_.assign(cols_.size(), 0.0);
        for (std::size_t j = 0; j < cols_.size(); ++j) {
            if (cols_[j].artificial) {
                phase_cost_[j] = -1.0;
                any_artificial = true;
            }
        }
        if (any_artificial) {
            if (!iterate(/*allow_artificial=*/true, sol.iterations)) {
                throw Error(ErrorKind::Numerical, "phase one reported unbounded");
            }
            double infeas = 0.0;
            for (std::size_t i = 0; i < r_; ++i) {
                if (cols_[basis_[i]].artificial) infeas += x_[i];
            }
            if (infeas > 1e-9 * bmax_) {
                sol.status = Status::Infeasible;
                return sol;
            }
            drive_out_artificials();
        }

        phase_cost_ = cost_;
        if (!iterate(/*allow_artificial=*/false, sol.iterations)) {
            sol.status = Status::Unbounded;
            return sol;
        }
        sol.status = Status::Optimal;
        sol.x.assign(structural_, 0.0);
        for (std::size_t i = 0; i < r_; ++i) {
            if (basis_[i] < structural_) sol.x[basis_[i]] = std::max(0.0, x_[i]);
        }
        sol.objective = 0.0;
        for (std::size_t j = 0; j < structural_; ++j) sol.objective += cost_[j] * sol.x[j];
        return sol;
    }

private:
    // Returns false when the phase objective is unbounded.
    bool iterate(bool allow_artificial, std::size_t& iterations) {
        const double rc_tol = 1e-11 * cmax_;
        const std::size_t max_iter = 200 * (cols_.size() + r_) + 10000;
        std::size_t since_refactor = 0;
        std::size_t degenerate_streak = 0;
        bool bland = false;
        std::vector<double> y(r_), alpha(r_);
        for (;;) {
            // y' = c_B' B^-1
            std::fill(y.begin(), y.end(), 0.0);
            for (std::size_t i = 0; i < r_; ++i) {
                const double cb = phase_cost_[basis_[i]];
                if (cb == 0.0) continue;
                const double* row = &binv_[i * r_];
                for (std::size_t k = 0; k < r_; ++k) y[k] += cb * row[k];
            }
            std::size_t enter = kNone;
            double best = rc_tol;
            for (std::size_t j = 0; j < cols_.size(); ++j) {
                if (in_basis_[j]) continue;
                if (cols_[j].artificial && !allow_artificial) continue;
                double d = phase_cost_[j];
                for (auto [row, v] : cols_[j].entries) d -= y[row] * v;
                if (d > best) {
                    best = d;
                    enter = j;
                    if (bland) break;
                }
            }
            if (enter == kNone) return true;

            column_direction(enter, alpha);
            std::size_t leave = kNone;
            double step = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < r_; ++i) {
                const bool stuck_artificial = !allow_artificial && cols_[basis_[i]].artificial;
                double t;
                if (stuck_artificial) {
                    if (std::abs(alpha[i]) <= kPivotTol) continue;
                    t = 0.0;
                } else {
                    if (alpha[i] <= kPivotTol) continue;
                    t = std::max(0.0, x_[i]) / alpha[i];
                }
                if (t < step || (t == step && leave != kNone && basis_[i] < basis_[leave])) {
                    step = t;
                    leave = i;
                }
            }
            if (leave == kNone) return false;

            pivot(leave, enter, alpha, step);
            if (++iterations > max_iter) throw Error(ErrorKind::Numerical, "simplex iteration limit reached");
            if (step <= 0.0) {
                if (++degenerate_streak > 50) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }
            if (++since_refactor >= kRefactorEvery) {
                refactor();
                since_refactor = 0;
            }
        }
    }

    void column_direction(std::size_t j, std::vector<double>& alpha) const {
        std::fill(alpha.begin(), alpha.end(), 0.0);
        for (auto [row, v] : cols_[j].entries) {
            for (std::size_t i = 0; i < r_; ++i) alpha[i] += binv_[i * r_ + row] * v;
        }
    }

    void pivot(std::size_t leave, std::size_t enter, const std::vector<double>& alpha, double step) {
        for (std::size_t i = 0; i < r_; ++i) {
            if (i != leave) x_[i] -= step * alpha[i];
        }
        x_[leave] = step;
        const double piv = alpha[leave];
        double* prow = &binv_[leave * r_];
        for (std::size_t k = 0; k < r_; ++k) prow[k] /= piv;
        for (std::size_t i = 0; i < r_; ++i) {
            if (i == leave || alpha[i] == 0.0) continue;
            double* row = &binv_[i * r_];
            const double f = alpha[i];
            for (std::size_t k = 0; k < r_; ++k) row[k] -= f * prow[k];
        }
        in_basis_[basis_[leave]] = false;
        basis_[leave] = enter;
        in_basis_[enter] = true;
    }

    void drive_out_artificials() {
        std::vector<double> alpha(r_);
        for (std::size_t i = 0; i < r_; ++i) {
            if (!cols_[basis_[i]].artificial) continue;
            for (std::size_t j = 0; j < cols_.size(); ++j) {
                if (in_basis_[j] || cols_[j].artificial) continue;
                double a = 0.0;
                for (auto [row, v] : cols_[j].entries) a += binv_[i * r_ + row] * v;
                if (std::abs(a) > 1e-9) {
                    column_direction(j, alpha);
                    pivot(i, j, alpha, std::max(0.0, x_[i]) / alpha[i]);
                    break;
                }
            }
            // Otherwise the row is redundant; the artificial stays basic at zero.
        }
        refactor();
    }

    // Gauss-Jordan inversion of the current basis matrix; recomputes x_B.
    void refactor() {
        std::vector<double> m(r_ * r_, 0.0);
        for (std::size_t i = 0; i < r_; ++i) {
            for (auto [row, v] : cols_[basis_[i]].entries) m[row * r_ + i] = v;
        }
        binv_.assign(r_ * r_, 0.0);
        for (std::size_t i = 0; i < r_; ++i) binv_[i * r_ + i] = 1.0;
        for (std::size_t c = 0; c < r_; ++c) {
            std::size_t best = c;
            for (std::size_t i = c + 1; i < r_; ++i) {
                if (std::abs(m[i * r_ + c]) > std::abs(m[best * r_ + c])) best = i;
            }
            if (std::abs(m[best * r_ + c]) < 1e-14) throw Error(ErrorKind::Numerical, "singular simplex basis");
            if (best != c) {
                for (std::size_t k = 0; k < r_; ++k) {
                    std::swap(m[best * r_ + k], m[c * r_ + k]);
                    std::swap(binv_[best * r_ + k], binv_[c * r_ + k]);
                }
            }
            const double piv = m[c * r_ + c];
            for (std::size_t k = 0; k < r_; ++k) {
                m[c * r_ + k] /= piv;
                binv_[c * r_ + k] /= piv;
            }
            for (std::size_t i = 0; i < r_; ++i) {
                if (i == c) continue;
                const double f = m[i * r_ + c];
                if (f == 0.0) continue;
                for (std::size_t k = 0; k < r_; ++k) {
                    m[i * r_ + k] -= f * m[c * r_ + k];
                    binv_[i * r_ + k] -= f * binv_[c * r_ + k];
                }
            }
        }
        x_.assign(r_, 0.0);
        for (std::size_t i = 0; i < r_; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < r_; ++k) acc += binv_[i * r_ + k] * b_[k];
            x_[i] = acc;
        }
    }

    std::size_t r_;
    std::size_t structural_;
    std::vector<double> b_;
    std::vector<Column> cols_;
    std::vector<double> cost_, phase_cost_;
    std::vector<std::size_t> basis_;
    std::vector<bool> in_basis_;
    std::vector<double> binv_, x_;
    double cmax_ = 1.0, bmax_ = 1.0;
};

}  // namespace

Solution maximize(const Problem& problem) {
    if (problem.rows() == 0) {
        Solution sol;
        sol.status = Status::Optimal;
        sol.x.assign(problem.cols(), 0.0);
        for (std::size_t j = 0; j < problem.cols(); ++j) {
            if (problem.objective(j) > 0.0) {
                sol.status = Status::Unbounded;
                break;
            }
        }
        return sol;
    }
    return RevisedSimplex(problem).run();
}

}  // namespace wdro::lp
