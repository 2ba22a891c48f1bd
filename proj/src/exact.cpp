#include "amalgam/exact.hpp"

#include <sstream>

namespace amalgam {

ExactMatrix ExactMatrix::identity(int n) {
  ExactMatrix m(n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

ExactMatrix ExactMatrix::from_int_rows(const std::vector<std::vector<long long>>& rows) {
  const int n = static_cast<int>(rows.size());
  ExactMatrix m(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ConfigInvalid("exact matrix rows must be square");
    for (int j = 0; j < n; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

ExactMatrix ExactMatrix::operator*(const ExactMatrix& o) const {
  if (n_ != o.n_) throw TypeMismatch("exact matrix size mismatch in product");
  ExactMatrix r(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) {
      const Rat& aik = at(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < n_; ++j) r.at(i, j) += aik * o.at(k, j);
    }
  return r;
}

ExactMatrix ExactMatrix::inverse() const {
  // Gauss-Jordan with exact pivots.
  ExactMatrix a = *this;
  ExactMatrix inv = identity(n_);
  for (int col = 0; col < n_; ++col) {
    int piv = -1;
    for (int r = col; r < n_; ++r)
      if (a.at(r, col) != 0) { piv = r; break; }
    if (piv < 0) throw Singular("exact matrix not invertible");
    if (piv != col) {
      for (int j = 0; j < n_; ++j) {
        std::swap(a.at(piv, j), a.at(col, j));
        std::swap(inv.at(piv, j), inv.at(col, j));
      }
    }
    const Rat p = a.at(col, col);
    for (int j = 0; j < n_; ++j) {
      a.at(col, j) /= p;
      inv.at(col, j) /= p;
    }
    for (int r = 0; r < n_; ++r) {
      if (r == col) continue;
      const Rat f = a.at(r, col);
      if (f == 0) continue;
      for (int j = 0; j < n_; ++j) {
        a.at(r, j) -= f * a.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

Rat ExactMatrix::det() const {
  ExactMatrix a = *this;
  Rat d = 1;
  for (int col = 0; col < n_; ++col) {
    int piv = -1;
    for (int r = col; r < n_; ++r)
      if (a.at(r, col) != 0) { piv = r; break; }
    if (piv < 0) return Rat(0);
    if (piv != col) {
      for (int j = 0; j < n_; ++j) std::swap(a.at(piv, j), a.at(col, j));
      d = -d;
    }
    d *= a.at(col, col);
    const Rat p = a.at(col, col);
    for (int r = col + 1; r < n_; ++r) {
      const Rat f = a.at(r, col) / p;
      if (f == 0) continue;
      for (int j = col; j < n_; ++j) a.at(r, j) -= f * a.at(col, j);
    }
  }
  return d;
}

bool ExactMatrix::operator==(const ExactMatrix& o) const {
  return n_ == o.n_ && a_ == o.a_;
}

ExactMatrix ExactMatrix::negated() const {
  ExactMatrix r(n_);
  for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = -a_[i];
  return r;
}

std::string ExactMatrix::key() const {
  std::ostringstream os;
  os << n_ << ':';
  for (const Rat& x : a_) os << x << ',';
  return os.str();
}

Eigen::MatrixXd ExactMatrix::to_double() const {
  Eigen::MatrixXd m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = static_cast<double>(at(i, j));
  return m;
}

}  // namespace amalgam
