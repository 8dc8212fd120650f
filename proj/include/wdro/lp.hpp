#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace wdro::lp {

enum class Sense { LessEqual, Equal, GreaterEqual };

enum class Status { Optimal, Infeasible, Unbounded };

/// max c'x subject to row constraints and x >= 0, with sparse columns.
class Problem {
public:
    explicit Problem(std::size_t rows) : sense_(rows, Sense::Equal), rhs_(rows, 0.0) {}

    void set_row(std::size_t row, Sense sense, double rhs) {
        sense_[row] = sense;
        rhs_[row] = rhs;
    }

    /// Adds a variable; entries are (row, coefficient) pairs. Returns its index.
    std::size_t add_column(double objective, std::vector<std::pair<std::size_t, double>> entries) {
        objective_.push_back(objective);
        columns_.push_back(std::move(entries));
        return columns_.size() - 1;
    }

    std::size_t rows() const noexcept { return rhs_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }
    Sense sense(std::size_t r) const { return sense_[r]; }
    double rhs(std::size_t r) const { return rhs_[r]; }
    double objective(std::size_t j) const { return objective_[j]; }
    const std::vector<std::pair<std::size_t, double>>& column(std::size_t j) const { return columns_[j]; }

private:
    std::vector<Sense> sense_;
    std::vector<double> rhs_;
    std::vector<double> objective_;
    std::vector<std::vector<std::pair<std::size_t, double>>> columns_;
};

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;
};

/// Two-phase revised simplex with an explicit basis inverse. Dantzig pricing with a
/// fallback to Bland's rule on degenerate stalls, so it always terminates.
Solution maximize(const Problem& problem);

}  // namespace wdro::lp
