#include "implan/sparse.hpp"

#include <algorithm>
#include <stdexcept>

namespace implan {

SparseMatrix::SparseMatrix(int rows, int cols)
    : num_rows_(rows),
      num_cols_(cols),
      row_begin_(static_cast<std::size_t>(rows), 0),
      row_end_(static_cast<std::size_t>(rows), 0) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("SparseMatrix: negative dimension");
  }
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  m.entries_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Entry e{i, 1.0};
    m.set_row(i, {&e, 1});
  }
  return m;
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  SparseMatrix m(rows, cols);
  m.entries_.reserve(triplets.size());
  std::size_t i = 0;
  while (i < triplets.size()) {
    const int r = triplets[i].row;
    if (r < 0 || r >= rows) {
      throw std::out_of_range("SparseMatrix::from_triplets: row out of range");
    }
    std::vector<Entry> row_entries;
    while (i < triplets.size() && triplets[i].row == r) {
      if (triplets[i].col < 0 || triplets[i].col >= cols) {
        throw std::out_of_range(
            "SparseMatrix::from_triplets: column out of range");
      }
      if (!row_entries.empty() && row_entries.back().col == triplets[i].col) {
        row_entries.back().value += triplets[i].value;
      } else {
        row_entries.push_back({triplets[i].col, triplets[i].value});
      }
      ++i;
    }
    m.set_row(r, row_entries);
  }
  return m;
}

SparseMatrix SparseMatrix::from_dense(
    const std::vector<std::vector<double>>& dense) {
  const int rows = static_cast<int>(dense.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(dense.front().size());
  SparseMatrix m(rows, cols);
  std::vector<Entry> row_entries;
  for (int r = 0; r < rows; ++r) {
    row_entries.clear();
    for (int c = 0; c < cols; ++c) {
      if (dense[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] !=
          0.0) {
        row_entries.push_back(
            {c, dense[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]});
      }
    }
    m.set_row(r, row_entries);
  }
  return m;
}

void SparseMatrix::set_row(int row, std::span<const Entry> entries) {
  if (row < 0 || row >= num_rows_) {
    throw std::out_of_range("SparseMatrix::set_row: row out of range");
  }
  const std::size_t begin = entries_.size();
  entries_.insert(entries_.end(), entries.begin(), entries.end());
  row_begin_[static_cast<std::size_t>(row)] = begin;
  row_end_[static_cast<std::size_t>(row)] = entries_.size();
}

void SparseMatrix::set_rows_shared(std::span<const int> row_indices,
                                   std::span<const Entry> entries) {
  const std::size_t begin = entries_.size();
  entries_.insert(entries_.end(), entries.begin(), entries.end());
  const std::size_t end = entries_.size();
  for (int row : row_indices) {
    if (row < 0 || row >= num_rows_) {
      throw std::out_of_range("SparseMatrix::set_rows_shared: row out of range");
    }
    row_begin_[static_cast<std::size_t>(row)] = begin;
    row_end_[static_cast<std::size_t>(row)] = end;
  }
}

std::size_t SparseMatrix::nonzeros() const {
  std::size_t n = 0;
  for (int r = 0; r < num_rows_; ++r) {
    n += row_end_[static_cast<std::size_t>(r)] -
         row_begin_[static_cast<std::size_t>(r)];
  }
  return n;
}

double SparseMatrix::row_sum(int r) const {
  double s = 0.0;
  for (const Entry& e : row(r)) {
    s += e.value;
  }
  return s;
}

void SparseMatrix::accumulate_pre_multiply(std::span<const double> x,
                                           std::span<double> y,
                                           double scale) const {
  for (int r = 0; r < num_rows_; ++r) {
    const double xr = x[static_cast<std::size_t>(r)];
    if (xr == 0.0) {
      continue;
    }
    const double w = xr * scale;
    for (const Entry& e : row(r)) {
      y[static_cast<std::size_t>(e.col)] += w * e.value;
    }
  }
}

std::vector<double> SparseMatrix::pre_multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(num_cols_), 0.0);
  accumulate_pre_multiply(x, y);
  return y;
}

std::vector<double> SparseMatrix::post_multiply(
    std::span<const double> v) const {
  std::vector<double> y(static_cast<std::size_t>(num_rows_), 0.0);
  for (int r = 0; r < num_rows_; ++r) {
    double s = 0.0;
    for (const Entry& e : row(r)) {
      s += e.value * v[static_cast<std::size_t>(e.col)];
    }
    y[static_cast<std::size_t>(r)] = s;
  }
  return y;
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> dense(
      static_cast<std::size_t>(num_rows_),
      std::vector<double>(static_cast<std::size_t>(num_cols_), 0.0));
  for (int r = 0; r < num_rows_; ++r) {
    for (const Entry& e : row(r)) {
      dense[static_cast<std::size_t>(r)][static_cast<std::size_t>(e.col)] +=
          e.value;
    }
  }
  return dense;
}

}  // namespace implan
