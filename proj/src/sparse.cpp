#include "finerfact/sparse.hpp"

#include <algorithm>
#include <stdexcept>

namespace finerfact {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });
    row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
    col_idx_.reserve(triplets.size());
    values_.reserve(triplets.size());
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        const Triplet& t = triplets[i];
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
            throw std::out_of_range("SparseMatrix: triplet out of range");
        }
        // merge duplicates
        if (!col_idx_.empty() && i > 0 && triplets[i - 1].row == t.row &&
            triplets[i - 1].col == t.col) {
            values_.back() += t.value;
            continue;
        }
        col_idx_.push_back(t.col);
        values_.push_back(t.value);
        row_ptr_[static_cast<std::size_t>(t.row) + 1] = col_idx_.size();
    }
    for (std::size_t r = 1; r <= static_cast<std::size_t>(rows); ++r) {
        row_ptr_[r] = std::max(row_ptr_[r], row_ptr_[r - 1]);
    }
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<std::size_t>(rows_), 0.0);
    for (int r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            acc += values_[k] * x[static_cast<std::size_t>(col_idx_[k])];
        }
        y[static_cast<std::size_t>(r)] = acc;
    }
}

std::vector<double> SparseMatrix::column_sums() const {
    std::vector<double> sums(static_cast<std::size_t>(cols_), 0.0);
    for (std::size_t k = 0; k < values_.size(); ++k) {
        sums[static_cast<std::size_t>(col_idx_[k])] += values_[k];
    }
    return sums;
}

void SparseMatrix::scale_columns_inverse(const std::vector<double>& scale) {
    for (std::size_t k = 0; k < values_.size(); ++k) {
        double s = scale[static_cast<std::size_t>(col_idx_[k])];
        if (s != 0.0) values_[k] /= s;
    }
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
    for_each([&](int r, int c, double v) { m(r, c) += v; });
    return m;
}

}  // namespace finerfact
