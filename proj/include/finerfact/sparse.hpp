#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace finerfact {

// Compressed-sparse-row matrix with double weights. Built from triplets;
// immutable afterwards.
class SparseMatrix {
public:
    struct Triplet {
        int row;
        int col;
        double value;
    };

    SparseMatrix() = default;
    SparseMatrix(int rows, int cols, std::vector<Triplet> triplets);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    // y = A x (dense vectors)
    void multiply(const std::vector<double>& x, std::vector<double>& y) const;

    std::vector<double> column_sums() const;

    // Divides every entry of column j by scale[j] (entries with scale[j] == 0 untouched).
    void scale_columns_inverse(const std::vector<double>& scale);

    Eigen::MatrixXd to_dense() const;

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (int r = 0; r < rows_; ++r) {
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                fn(r, col_idx_[k], values_[k]);
            }
        }
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

}  // namespace finerfact
