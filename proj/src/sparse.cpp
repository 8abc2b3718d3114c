#include "dwr/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace dwr {

double norm2(const std::vector<double>& x)
{
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

SparseMatrix SparseMatrix::from_triplets(int n, int m, std::vector<Triplet> t)
{
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix A;
  A.rows = n;
  A.cols = m;
  A.row_ptr.assign(n + 1, 0);

  // merge duplicates
  std::size_t out = 0;
  for (std::size_t i = 0; i < t.size();) {
    std::size_t j = i + 1;
    double v = t[i].value;
    while (j < t.size() && t[j].row == t[i].row && t[j].col == t[i].col) v += t[j++].value;
    t[out].row = t[i].row;
    t[out].col = t[i].col;
    t[out].value = v;
    ++out;
    i = j;
  }
  t.resize(out);

  A.col_idx.resize(out);
  A.val.resize(out);
  for (std::size_t i = 0; i < out; ++i) {
    A.row_ptr[t[i].row + 1]++;
    A.col_idx[i] = t[i].col;
    A.val[i] = t[i].value;
  }
  for (int r = 0; r < n; ++r) A.row_ptr[r + 1] += A.row_ptr[r];
  return A;
}

std::vector<double> SparseMatrix::apply(const std::vector<double>& x) const
{
  std::vector<double> y(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) s += val[p] * x[col_idx[p]];
    y[r] = s;
  }
  return y;
}

SparseMatrix SparseMatrix::transposed() const
{
  SparseMatrix T;
  T.rows = cols;
  T.cols = rows;
  T.row_ptr.assign(cols + 1, 0);
  for (int c : col_idx) T.row_ptr[c + 1]++;
  for (int r = 0; r < cols; ++r) T.row_ptr[r + 1] += T.row_ptr[r];
  T.col_idx.resize(val.size());
  T.val.resize(val.size());
  std::vector<int> next(T.row_ptr.begin(), T.row_ptr.end() - 1);
  for (int r = 0; r < rows; ++r)
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      const int pos = next[col_idx[p]]++;
      T.col_idx[pos] = r;
      T.val[pos] = val[p];
    }
  return T;
}

double SparseMatrix::frobenius_norm() const
{
  double s = 0.0;
  for (double v : val) s += v * v;
  return std::sqrt(s);
}

std::vector<int> rcm_order(const SparseMatrix& A)
{
  const int n = A.rows;
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = A.row_ptr[i + 1] - A.row_ptr[i];

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);
  for (int start = 0; start < n; ++start) {
    int s = -1;
    for (int i = 0; i < n; ++i)
      if (!visited[i] && (s < 0 || degree[i] < degree[s])) s = i;
    if (s < 0) break;
    std::deque<int> queue{s};
    visited[s] = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      order.push_back(u);
      std::vector<int> nbrs;
      for (int p = A.row_ptr[u]; p < A.row_ptr[u + 1]; ++p) {
        const int v = A.col_idx[p];
        if (v != u && !visited[v]) {
          visited[v] = 1;
          nbrs.push_back(v);
        }
      }
      std::sort(nbrs.begin(), nbrs.end(),
                [&](int a, int b) { return degree[a] != degree[b] ? degree[a] < degree[b] : a < b; });
      for (int v : nbrs) queue.push_back(v);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

namespace {

void nd_recurse(const SparseMatrix& A, const std::vector<Vec2>& coords, std::vector<int>& nodes,
                std::vector<char>& in_left, std::vector<int>& out)
{
  if (nodes.size() <= 48) {
    std::sort(nodes.begin(), nodes.end());
    out.insert(out.end(), nodes.begin(), nodes.end());
    return;
  }

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int i : nodes) {
    xmin = std::min(xmin, coords[i].x);
    xmax = std::max(xmax, coords[i].x);
    ymin = std::min(ymin, coords[i].y);
    ymax = std::max(ymax, coords[i].y);
  }
  const bool split_x = (xmax - xmin) >= (ymax - ymin);

  std::sort(nodes.begin(), nodes.end(), [&](int a, int b) {
    const double ca = split_x ? coords[a].x : coords[a].y;
    const double cb = split_x ? coords[b].x : coords[b].y;
    return ca != cb ? ca < cb : a < b;
  });

  const std::size_t half = nodes.size() / 2;
  std::vector<int> left(nodes.begin(), nodes.begin() + half);
  std::vector<int> right(nodes.begin() + half, nodes.end());

  for (int i : left) in_left[i] = 1;
  std::vector<int> sep, interior;
  for (int i : right) {
    bool touches = false;
    for (int p = A.row_ptr[i]; p < A.row_ptr[i + 1] && !touches; ++p)
      touches = in_left[A.col_idx[p]] != 0;
    (touches ? sep : interior).push_back(i);
  }
  for (int i : left) in_left[i] = 0;

  nd_recurse(A, coords, left, in_left, out);
  nd_recurse(A, coords, interior, in_left, out);
  std::sort(sep.begin(), sep.end());
  out.insert(out.end(), sep.begin(), sep.end());
}

} // namespace

std::vector<int> nested_dissection_order(const SparseMatrix& A, const std::vector<Vec2>& coords)
{
  std::vector<int> nodes(A.rows);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::vector<char> in_left(A.rows, 0);
  std::vector<int> out;
  out.reserve(A.rows);
  nd_recurse(A, coords, nodes, in_left, out);
  return out;
}

DirectSolver::DirectSolver(const SparseMatrix& A, const std::vector<Vec2>* coords)
{
  DWR_REQUIRE(A.rows == A.cols, "direct solver needs a square matrix");
  n_ = A.rows;

  // The factorization uses the upper triangle of a symmetric matrix.
  {
    const SparseMatrix T = A.transposed();
    DWR_REQUIRE(T.row_ptr == A.row_ptr && T.col_idx == A.col_idx,
                "direct solver requires structurally symmetric input");
    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t i = 0; i < A.val.size(); ++i) {
      max_abs = std::max(max_abs, std::abs(A.val[i]));
      max_asym = std::max(max_asym, std::abs(A.val[i] - T.val[i]));
    }
    if (max_asym > 1e-8 * std::max(max_abs, 1e-300))
      throw SolverError("direct solver requires a symmetric matrix");
  }

  perm_ = (coords != nullptr) ? nested_dissection_order(A, *coords) : rcm_order(A);
  iperm_.assign(n_, 0);
  for (int k = 0; k < n_; ++k) iperm_[perm_[k]] = k;

  // Permuted matrix B = P A P^T.
  std::vector<Triplet> t;
  t.reserve(A.val.size());
  for (int r = 0; r < n_; ++r)
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
      t.push_back({iperm_[r], iperm_[A.col_idx[p]], A.val[p]});
  const SparseMatrix B = SparseMatrix::from_triplets(n_, n_, std::move(t));

  // Symbolic: elimination tree and column counts (Davis' LDL approach).
  std::vector<int> parent(n_, -1), flag(n_, -1), lnz(n_, 0);
  for (int k = 0; k < n_; ++k) {
    flag[k] = k;
    for (int p = B.row_ptr[k]; p < B.row_ptr[k + 1]; ++p) {
      int i = B.col_idx[p];
      if (i >= k) continue;
      while (flag[i] != k) {
        if (parent[i] == -1) parent[i] = k;
        lnz[i]++;
        flag[i] = k;
        i = parent[i];
      }
    }
  }
  Lp_.assign(n_ + 1, 0);
  for (int k = 0; k < n_; ++k) Lp_[k + 1] = Lp_[k] + lnz[k];
  Li_.assign(Lp_[n_], 0);
  Lx_.assign(Lp_[n_], 0.0);
  D_.assign(n_, 0.0);

  // Numeric factorization (up-looking, column-stored L).
  std::vector<double> y(n_, 0.0);
  std::vector<int> pattern(n_), lfill(n_, 0);
  std::fill(flag.begin(), flag.end(), -1);
  for (int k = 0; k < n_; ++k) {
    int top = n_;
    flag[k] = k;
    for (int p = B.row_ptr[k]; p < B.row_ptr[k + 1]; ++p) {
      const int col = B.col_idx[p];
      if (col > k) continue;
      y[col] += B.val[p];
      int len = 0;
      int i = col;
      while (flag[i] != k) {
        pattern[len++] = i;
        flag[i] = k;
        i = parent[i];
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    D_[k] = y[k];
    y[k] = 0.0;
    for (; top < n_; ++top) {
      const int i = pattern[top];
      const double yi = y[i];
      y[i] = 0.0;
      const int p2 = Lp_[i] + lfill[i];
      for (int p = Lp_[i]; p < p2; ++p) y[Li_[p]] -= Lx_[p] * yi;
      const double lki = yi / D_[i];
      D_[k] -= lki * yi;
      Li_[p2] = k;
      Lx_[p2] = lki;
      lfill[i]++;
    }
    if (D_[k] == 0.0 || !std::isfinite(D_[k]))
      throw SolverError("singular matrix in LDL^T factorization at pivot " + std::to_string(k));
  }
}

std::vector<double> DirectSolver::solve(const std::vector<double>& b) const
{
  DWR_REQUIRE(static_cast<int>(b.size()) == n_, "right-hand side size mismatch");
  std::vector<double> x(n_);
  for (int k = 0; k < n_; ++k) x[k] = b[perm_[k]];
  for (int j = 0; j < n_; ++j)
    for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) x[Li_[p]] -= Lx_[p] * x[j];
  for (int j = 0; j < n_; ++j) x[j] /= D_[j];
  for (int j = n_ - 1; j >= 0; --j)
    for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) x[j] -= Lx_[p] * x[Li_[p]];
  std::vector<double> out(n_);
  for (int k = 0; k < n_; ++k) out[perm_[k]] = x[k];
  return out;
}

std::vector<double> linear_solve(const SparseMatrix& M, const std::vector<double>& b,
                                 const std::vector<Vec2>* coords)
{
  DirectSolver solver(M, coords);
  std::vector<double> x = solver.solve(b);

  const double normM = M.frobenius_norm();
  const double normb = norm2(b);
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::vector<double> r = M.apply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    const double bound = 1e-12 * (normb + normM * norm2(x));
    if (norm2(r) <= bound) return x;
    const std::vector<double> dx = solver.solve(r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  }
  std::vector<double> r = M.apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  if (norm2(r) > 1e-12 * (normb + normM * norm2(x)))
    throw SolverError("linear solve failed the residual contract (ill-conditioned system)");
  return x;
}

std::vector<double> cg_solve(const SparseMatrix& A, const std::vector<double>& b, double rel_tol,
                             int max_iter)
{
  const int n = A.rows;
  if (max_iter <= 0) max_iter = 20 * n + 100;

  std::vector<double> inv_diag(n, 1.0);
  for (int r = 0; r < n; ++r)
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
      if (A.col_idx[p] == r && A.val[p] != 0.0) inv_diag[r] = 1.0 / A.val[p];

  std::vector<double> x(n, 0.0), r = b, z(n), p(n);
  const double normb = norm2(b);
  if (normb == 0.0) return x;

  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iter; ++it) {
    if (norm2(r) <= rel_tol * normb) return x;
    const std::vector<double> Ap = A.apply(p);
    const double alpha = rz / dot(p, Ap);
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (norm2(r) > rel_tol * normb * 10.0)
    throw SolverError("conjugate gradients did not converge");
  return x;
}

} // namespace dwr
