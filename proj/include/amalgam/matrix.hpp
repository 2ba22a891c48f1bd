#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "amalgam/exact.hpp"

namespace amalgam {

// Group element as a matrix. Carries an exact rational matrix whenever the
// inputs were rational (and then all products/inverses stay exact); a double
// matrix is always available for the numerical layer.
class GroupMatrix {
 public:
  GroupMatrix() = default;
  explicit GroupMatrix(ExactMatrix e) : exact_(std::move(e)) { approx_ = exact_->to_double(); }
  explicit GroupMatrix(Eigen::MatrixXd m) : approx_(std::move(m)) {
    if (approx_.rows() != approx_.cols()) throw TypeMismatch("group matrix must be square");
  }

  static GroupMatrix identity(int n, bool exact = true);

  bool is_exact() const { return exact_.has_value(); }
  const ExactMatrix& exact() const;
  const Eigen::MatrixXd& approx() const { return approx_; }
  int dim() const { return static_cast<int>(approx_.rows()); }

  GroupMatrix operator*(const GroupMatrix& o) const;
  GroupMatrix inverse() const;

  // Canonical hash key; only available for exact elements.
  std::string key() const;

 private:
  std::optional<ExactMatrix> exact_;
  Eigen::MatrixXd approx_;
};

struct CompareOptions {
  double tol = 1e-9;
  bool projective = false;  // identify g with -g (PSL semantics)
};

// Entrywise equality: exact when both sides are exact, otherwise within
// tol relative to the larger entry scale. Projective mode accepts either sign.
bool matrices_equal(const GroupMatrix& a, const GroupMatrix& b, const CompareOptions& cmp);

bool is_identity(const GroupMatrix& g, const CompareOptions& cmp);

}  // namespace amalgam
