#include "amalgam/matrix.hpp"

namespace amalgam {

GroupMatrix GroupMatrix::identity(int n, bool exact) {
  if (exact) return GroupMatrix(ExactMatrix::identity(n));
  return GroupMatrix(Eigen::MatrixXd::Identity(n, n));
}

const ExactMatrix& GroupMatrix::exact() const {
  if (!exact_) throw Error("element has no exact matrix");
  return *exact_;
}

GroupMatrix GroupMatrix::operator*(const GroupMatrix& o) const {
  if (dim() != o.dim()) throw TypeMismatch("dimension mismatch in product");
  if (exact_ && o.exact_) return GroupMatrix(*exact_ * *o.exact_);
  return GroupMatrix(Eigen::MatrixXd(approx_ * o.approx_));
}

GroupMatrix GroupMatrix::inverse() const {
  if (exact_) return GroupMatrix(exact_->inverse());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(approx_);
  if (!lu.isInvertible()) throw Singular("matrix not invertible");
  return GroupMatrix(Eigen::MatrixXd(lu.inverse()));
}

std::string GroupMatrix::key() const {
  if (!exact_) throw Error("hash key requires an exact matrix");
  return exact_->key();
}

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

bool matrices_equal(const GroupMatrix& a, const GroupMatrix& b, const CompareOptions& cmp) {
  if (a.dim() != b.dim()) return false;
  if (a.is_exact() && b.is_exact()) {
    if (a.exact() == b.exact()) return true;
    return cmp.projective && a.exact() == b.exact().negated();
  }
  const double scale =
      std::max({1.0, a.approx().cwiseAbs().maxCoeff(), b.approx().cwiseAbs().maxCoeff()});
  if (max_abs_diff(a.approx(), b.approx()) <= cmp.tol * scale) return true;
  if (cmp.projective &&
      max_abs_diff(a.approx(), Eigen::MatrixXd(-b.approx())) <= cmp.tol * scale)
    return true;
  return false;
}

bool is_identity(const GroupMatrix& g, const CompareOptions& cmp) {
  return matrices_equal(g, GroupMatrix::identity(g.dim(), g.is_exact()), cmp);
}

}  // namespace amalgam
