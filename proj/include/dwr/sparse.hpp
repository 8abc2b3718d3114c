#ifndef DWR_SPARSE_HPP
#define DWR_SPARSE_HPP

#include <vector>

#include "dwr/common.hpp"

namespace dwr {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed row storage; sorted unique columns per row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> val;

  static SparseMatrix from_triplets(int n, int m, std::vector<Triplet> triplets);

  std::vector<double> apply(const std::vector<double>& x) const;
  SparseMatrix transposed() const;
  double frobenius_norm() const;
  int nnz() const { return static_cast<int>(val.size()); }
};

enum class LinearSolverKind { direct, cg };

/// Sparse LDL^T factorization for symmetric matrices with a fill-reducing
/// ordering: geometric nested dissection when dof coordinates are supplied,
/// reverse Cuthill-McKee otherwise. Zero pivots raise SolverError.
class DirectSolver {
public:
  explicit DirectSolver(const SparseMatrix& A, const std::vector<Vec2>* coords = nullptr);
  std::vector<double> solve(const std::vector<double>& b) const;

private:
  int n_ = 0;
  std::vector<int> perm_;  // elimination position -> original index
  std::vector<int> iperm_;
  std::vector<int> Lp_, Li_;
  std::vector<double> Lx_, D_;
};

/// Direct solve with the residual contract
///   ||Mx-b||_2 <= 1e-12 (||b||_2 + ||M||_F ||x||_2)
/// enforced via iterative refinement; violations raise SolverError.
std::vector<double> linear_solve(const SparseMatrix& M, const std::vector<double>& b,
                                 const std::vector<Vec2>* coords = nullptr);

/// Conjugate gradients with diagonal preconditioner, for SPD systems.
std::vector<double> cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                             double rel_tol = 1e-13, int max_iter = 0);

std::vector<int> rcm_order(const SparseMatrix& A);
std::vector<int> nested_dissection_order(const SparseMatrix& A, const std::vector<Vec2>& coords);

double norm2(const std::vector<double>& x);
double dot(const std::vector<double>& a, const std::vector<double>& b);

} // namespace dwr

#endif
