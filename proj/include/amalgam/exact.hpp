#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "amalgam/errors.hpp"

namespace amalgam {

using Rat = boost::multiprecision::cpp_rational;

// Small dense square matrix over arbitrary-precision rationals. This is the
// exact layer under the word machinery: products, inverses and equality are
// computed without rounding, so membership oracles and coset bookkeeping can
// rely on true equality.
class ExactMatrix {
 public:
  ExactMatrix() = default;
  explicit ExactMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, Rat(0)) {}

  static ExactMatrix identity(int n);
  static ExactMatrix from_int_rows(const std::vector<std::vector<long long>>& rows);

  int dim() const { return n_; }
  Rat& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  const Rat& at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

  ExactMatrix operator*(const ExactMatrix& o) const;
  ExactMatrix inverse() const;  // throws Singular
  Rat det() const;
  bool operator==(const ExactMatrix& o) const;
  bool operator!=(const ExactMatrix& o) const { return !(*this == o); }
  ExactMatrix negated() const;
  bool is_identity() const { return *this == identity(n_); }

  // Canonical string of the entries; used as a hash key in enumerated balls.
  std::string key() const;

  Eigen::MatrixXd to_double() const;

 private:
  int n_ = 0;
  std::vector<Rat> a_;
};

}  // namespace amalgam
