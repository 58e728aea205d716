#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace implan {

/// Row-major sparse matrix with aliasable row storage.
///
/// Each row is a (begin, end) span into shared column/value arrays, so many
/// rows may reference a single stored row. Perfect-repair transitions are a
/// one-row belief broadcast over thousands of states; storing that row once
/// keeps the 16k-state parametric model in memory.
class SparseMatrix {
 public:
  struct Entry {
    int col;
    double value;
  };
  struct Triplet {
    int row;
    int col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(int rows, int cols);

  static SparseMatrix identity(int n);
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix from_dense(
      const std::vector<std::vector<double>>& dense);

  int rows() const { return num_rows_; }
  int cols() const { return num_cols_; }

  /// Installs a row. Each row index must be set at most once.
  void set_row(int row, std::span<const Entry> entries);
  /// Installs one stored copy of `entries` referenced by every listed row.
  void set_rows_shared(std::span<const int> row_indices,
                       std::span<const Entry> entries);

  std::span<const Entry> row(int r) const {
    return {entries_.data() + row_begin_[static_cast<std::size_t>(r)],
            entries_.data() + row_end_[static_cast<std::size_t>(r)]};
  }

  /// Logical number of stored entries, counting shared rows per reference.
  std::size_t nonzeros() const;

  double row_sum(int r) const;

  /// y += scale * (x^T M); iterates only rows where x is nonzero.
  void accumulate_pre_multiply(std::span<const double> x, std::span<double> y,
                               double scale = 1.0) const;
  /// Returns x^T M as a dense vector.
  std::vector<double> pre_multiply(std::span<const double> x) const;
  /// Returns M v as a dense vector (per-row dot products).
  std::vector<double> post_multiply(std::span<const double> v) const;

  std::vector<std::vector<double>> to_dense() const;

 private:
  int num_rows_ = 0;
  int num_cols_ = 0;
  std::vector<std::size_t> row_begin_;
  std::vector<std::size_t> row_end_;
  std::vector<Entry> entries_;
};

}  // namespace implan
