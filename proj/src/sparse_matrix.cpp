#include "pnorm/sparse_matrix.hpp"

#include <algorithm>
#include <cstdio>

#include "pnorm/errors.hpp"

namespace pnorm {

SparseMatrix::SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw InvalidInputError("SparseMatrix: negative dimension");
  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  SparseMatrix a(rows, cols);
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw InvalidInputError("SparseMatrix: triplet out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  a.col_.reserve(entries.size());
  a.vals_.reserve(entries.size());
  std::size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    a.row_ptr_[static_cast<std::size_t>(r)] = static_cast<int>(a.col_.size());
    while (i < entries.size() && entries[i].row == r) {
      const int c = entries[i].col;
      double v = 0.0;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;
        ++i;
      }
      if (v != 0.0) {
        a.col_.push_back(c);
        a.vals_.push_back(v);
      }
    }
  }
  a.row_ptr_[static_cast<std::size_t>(rows)] = static_cast<int>(a.col_.size());
  return a;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ts.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(ts));
}

SparseMatrix SparseMatrix::diagonal(const VectorXd& d) {
  const int n = static_cast<int>(d.size());
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (d[i] != 0.0) ts.push_back({i, i, d[i]});
  return from_triplets(n, n, std::move(ts));
}

SparseMatrix SparseMatrix::from_dense(const MatrixXd& a, double drop_tol) {
  std::vector<Triplet> ts;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (std::abs(a(i, j)) > drop_tol) ts.push_back({i, j, a(i, j)});
  return from_triplets(static_cast<int>(a.rows()), static_cast<int>(a.cols()), std::move(ts));
}

VectorXd SparseMatrix::apply(const VectorXd& x) const {
  if (x.size() != cols_) throw InvalidInputError("SparseMatrix::apply: size mismatch");
  VectorXd y = VectorXd::Zero(rows_);
  for (int r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += vals_[k] * x[col_[k]];
    y[r] = acc;
  }
  return y;
}

VectorXd SparseMatrix::apply_transpose(const VectorXd& y) const {
  if (y.size() != rows_) throw InvalidInputError("SparseMatrix::apply_transpose: size mismatch");
  VectorXd x = VectorXd::Zero(cols_);
  for (int r = 0; r < rows_; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) x[col_[k]] += vals_[k] * yr;
  }
  return x;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> ts;
  ts.reserve(vals_.size());
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) ts.push_back({col_[k], r, vals_[k]});
  return from_triplets(cols_, rows_, std::move(ts));
}

MatrixXd SparseMatrix::to_dense() const {
  MatrixXd a = MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) a(r, col_[k]) = vals_[k];
  return a;
}

SparseMatrix SparseMatrix::scaled_rows(const VectorXd& d) const {
  if (d.size() != rows_) throw InvalidInputError("scaled_rows: size mismatch");
  std::vector<Triplet> ts;
  ts.reserve(vals_.size());
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) ts.push_back({r, col_[k], d[r] * vals_[k]});
  return from_triplets(rows_, cols_, std::move(ts));
}

SparseMatrix SparseMatrix::scaled(double c) const {
  std::vector<Triplet> ts;
  ts.reserve(vals_.size());
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) ts.push_back({r, col_[k], c * vals_[k]});
  return from_triplets(rows_, cols_, std::move(ts));
}

SparseMatrix SparseMatrix::vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw InvalidInputError("vstack: column mismatch");
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(top.nnz() + bottom.nnz()));
  for (const Triplet& t : top.triplets()) ts.push_back(t);
  for (const Triplet& t : bottom.triplets()) ts.push_back({t.row + top.rows(), t.col, t.value});
  return from_triplets(top.rows() + bottom.rows(), top.cols(), std::move(ts));
}

SparseMatrix SparseMatrix::gather_rows(const std::vector<int>& pick, const VectorXd& scale) const {
  if (static_cast<int>(pick.size()) != scale.size())
    throw InvalidInputError("gather_rows: pick/scale mismatch");
  std::vector<Triplet> ts;
  for (std::size_t i = 0; i < pick.size(); ++i) {
    const int r = pick[i];
    if (r < 0 || r >= rows_) throw InvalidInputError("gather_rows: row out of range");
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      ts.push_back({static_cast<int>(i), col_[k], scale[static_cast<Eigen::Index>(i)] * vals_[k]});
  }
  return from_triplets(static_cast<int>(pick.size()), cols_, std::move(ts));
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& b) const {
  if (cols_ != b.rows()) throw InvalidInputError("multiply: inner dimension mismatch");
  std::vector<Triplet> ts;
  for (int r = 0; r < rows_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int mid = col_[k];
      const double v = vals_[k];
      for (int k2 = b.row_ptr_[mid]; k2 < b.row_ptr_[mid + 1]; ++k2)
        ts.push_back({r, b.col_[k2], v * b.vals_[k2]});
    }
  }
  return from_triplets(rows_, b.cols(), std::move(ts));
}

SparseMatrix::RowRef SparseMatrix::row(int i) const {
  if (i < 0 || i >= rows_) throw InvalidInputError("row: out of range");
  return {col_.data() + row_ptr_[i], vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

VectorXd SparseMatrix::row_dense(int i) const {
  VectorXd r = VectorXd::Zero(cols_);
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) r[col_[k]] = vals_[k];
  return r;
}

bool SparseMatrix::is_diagonal() const {
  if (rows_ != cols_) return false;
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_[k] != r) return false;
  return true;
}

VectorXd SparseMatrix::diagonal_values() const {
  VectorXd d = VectorXd::Zero(std::min(rows_, cols_));
  for (int r = 0; r < std::min(rows_, cols_); ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_[k] == r) d[r] = vals_[k];
  return d;
}

double SparseMatrix::column_l1_bound() const {
  VectorXd colsum = VectorXd::Zero(cols_);
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) colsum[col_[k]] += std::abs(vals_[k]);
  return cols_ == 0 ? 0.0 : colsum.maxCoeff();
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> ts;
  ts.reserve(vals_.size());
  for (int r = 0; r < rows_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) ts.push_back({r, col_[k], vals_[k]});
  return ts;
}

}  // namespace pnorm
