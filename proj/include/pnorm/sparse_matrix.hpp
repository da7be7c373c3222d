#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pnorm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Role aliases: both are plain dense vectors, the names record whether values
// live on edges or vertices of a graph.
using EdgeVector = Eigen::VectorXd;
using VertexVector = Eigen::VectorXd;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Sparse matrix built from coordinate triplets and stored canonically in CSR:
// duplicate coordinates are summed, exact zeros dropped, column indices sorted
// within each row. apply / apply_transpose run in O(nnz). Dense export is the
// intended path for factorization-sized work.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols);

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
  static SparseMatrix identity(int n);
  static SparseMatrix diagonal(const VectorXd& d);
  static SparseMatrix from_dense(const MatrixXd& a, double drop_tol = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(vals_.size()); }

  VectorXd apply(const VectorXd& x) const;
  VectorXd apply_transpose(const VectorXd& y) const;
  SparseMatrix transposed() const;
  MatrixXd to_dense() const;

  // diag(d) * A and c * A.
  SparseMatrix scaled_rows(const VectorXd& d) const;
  SparseMatrix scaled(double c) const;

  // Stack on top of each other (column counts must match).
  static SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom);

  // New matrix whose i-th row is scale[i] * A.row(pick[i]).
  SparseMatrix gather_rows(const std::vector<int>& pick, const VectorXd& scale) const;

  // A * B (used only for composing sparse maps; simple row-merge product).
  SparseMatrix multiply(const SparseMatrix& b) const;

  struct RowRef {
    const int* cols;
    const double* vals;
    int len;
  };
  RowRef row(int i) const;
  VectorXd row_dense(int i) const;

  // Square with entries confined to the diagonal (pattern check, not values).
  bool is_diagonal() const;
  VectorXd diagonal_values() const;

  // max over columns of sum_i |A_ij|; bounds the l1->l1 operator norm.
  double column_l1_bound() const;

  std::vector<Triplet> triplets() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_ = {0};
  std::vector<int> col_;
  std::vector<double> vals_;
};

}  // namespace pnorm
