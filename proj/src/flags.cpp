#include "amalgam/flags.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>

namespace amalgam::flags {

namespace {

// Householder QR with the sign convention diag(R) >= 0, so the result is a
// deterministic function of the input and an already-orthonormal input with
// positive diagonal R comes back unchanged.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m, bool* singular = nullptr) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  double scale = m.cwiseAbs().maxCoeff();
  if (singular) *singular = false;
  for (int j = 0; j < q.cols(); ++j) {
    double diag = j < r.cols() ? r(j, j) : 0.0;
    if (singular && std::abs(diag) <= 1e-12 * std::max(scale, 1.0)) *singular = true;
    if (diag < 0) q.col(j) = -q.col(j);
  }
  return q;
}

void check_same_shape(const Flag& f, const Flag& g, const char* what) {
  if (f.type != g.type) throw TypeMismatch(std::string(what) + ": flag types differ");
}

// sin of the largest principal angle between the spans of the first k columns.
double stage_distance(const Eigen::MatrixXd& fb, const Eigen::MatrixXd& gb, int k) {
  Eigen::MatrixXd fk = fb.leftCols(k), gk = gb.leftCols(k);
  Eigen::MatrixXd rest = gk - fk * (fk.transpose() * gk);  // (I - P_F) G_k
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rest);
  double s = svd.singularValues()(0);
  return std::clamp(s, 0.0, 1.0);
}

bool basis_lex_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      if (a(i, j) < b(i, j)) return true;
      if (a(i, j) > b(i, j)) return false;
    }
  return false;
}

// Deterministic uniform double in [-1, 1) from raw mt19937 output.
double unit_draw(std::mt19937& rng) {
  return 2.0 * (double(rng()) / 4294967296.0) - 1.0;
}

}  // namespace

const NumericPolicy& policy() {
  static const NumericPolicy p;
  return p;
}

void FlagType::validate() const {
  if (d <= 0) throw ConfigInvalid("flag type needs a positive ambient dimension");
  if (dims.empty()) throw ConfigInvalid("flag type needs at least one stage");
  int prev = 0;
  for (int k : dims) {
    if (k <= prev || k >= d) throw ConfigInvalid("flag stage dims must increase strictly inside (0, d)");
    prev = k;
  }
}

bool FlagType::iota_invariant() const {
  FlagType t = opposition_involution(*this);
  return t == *this;
}

FlagType FlagType::full(int d) {
  FlagType t;
  t.d = d;
  for (int k = 1; k < d; ++k) t.dims.push_back(k);
  t.validate();
  return t;
}

FlagType opposition_involution(const FlagType& t) {
  t.validate();
  FlagType out;
  out.d = t.d;
  for (int k : t.dims) out.dims.push_back(t.d - k);
  std::sort(out.dims.begin(), out.dims.end());
  return out;
}

Flag make_flag(const Eigen::MatrixXd& orthonormal_basis, FlagType type) {
  type.validate();
  if (orthonormal_basis.rows() != type.d || orthonormal_basis.cols() != type.d)
    throw TypeMismatch("flag basis must be d x d for the type's ambient dimension");
  Eigen::MatrixXd gram = orthonormal_basis.transpose() * orthonormal_basis;
  double dev = (gram - Eigen::MatrixXd::Identity(type.d, type.d)).cwiseAbs().maxCoeff();
  if (dev > policy().orthonormality)
    throw ConfigInvalid("flag basis fails the orthonormality tolerance");
  return Flag{orthonormal_basis, std::move(type)};
}

Flag flag_from_columns(const Eigen::MatrixXd& m, FlagType type) {
  type.validate();
  if (m.rows() != type.d || m.cols() != type.d)
    throw TypeMismatch("flag columns must form a d x d matrix");
  bool singular = false;
  Eigen::MatrixXd q = orthonormalize(m, &singular);
  if (singular) throw Singular("flag columns are not linearly independent");
  return Flag{std::move(q), std::move(type)};
}

Flag standard_flag(FlagType type) {
  type.validate();
  return Flag{Eigen::MatrixXd::Identity(type.d, type.d), std::move(type)};
}

Flag reversed_standard_flag(FlagType type) {
  type.validate();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(type.d, type.d);
  for (int j = 0; j < type.d; ++j) b(type.d - 1 - j, j) = 1.0;
  return Flag{std::move(b), std::move(type)};
}

Flag seeded_flag(unsigned seed, FlagType type) {
  type.validate();
  std::mt19937 rng(seed);
  Eigen::MatrixXd m(type.d, type.d);
  for (int i = 0; i < type.d; ++i)
    for (int j = 0; j < type.d; ++j) m(i, j) = unit_draw(rng);
  return flag_from_columns(m, std::move(type));
}

double antipodality_margin(const Flag& f, const Flag& g) {
  if (f.d() != g.d()) throw TypeMismatch("antipodality needs flags in the same ambient space");
  if (opposition_involution(f.type) != g.type)
    throw TypeMismatch("antipodality needs types related by the opposition involution");
  const int d = f.d();
  double margin = std::numeric_limits<double>::infinity();
  for (int k : f.type.dims) {
    Eigen::MatrixXd joint(d, d);
    joint.leftCols(k) = f.basis.leftCols(k);
    joint.rightCols(d - k) = g.basis.leftCols(d - k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(joint);
    margin = std::min(margin, svd.singularValues()(d - 1));
  }
  return margin;
}

double flag_distance(const Flag& f, const Flag& g) {
  check_same_shape(f, g, "flag_distance");
  // Canonical argument order makes the metric symmetric bit-for-bit.
  const Flag& lo = basis_lex_less(g.basis, f.basis) ? g : f;
  const Flag& hi = (&lo == &f) ? g : f;
  double dist = 0.0;
  for (int k : f.type.dims) dist = std::max(dist, stage_distance(lo.basis, hi.basis, k));
  return dist;
}

Flag act(const Eigen::MatrixXd& g, const Flag& f) {
  if (g.rows() != f.d() || g.cols() != f.d())
    throw TypeMismatch("acting matrix does not match the flag's ambient dimension");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-12 * sv(0)) throw Singular("acting matrix is numerically singular");
  bool singular = false;
  Eigen::MatrixXd q = orthonormalize(g * f.basis, &singular);
  if (singular) throw Singular("acting matrix collapsed the flag basis");
  return Flag{std::move(q), f.type};
}

Flag attracting_flag(const Eigen::MatrixXd& g, const FlagType& t) {
  t.validate();
  if (g.rows() != t.d || g.cols() != t.d)
    throw TypeMismatch("matrix does not match the flag type's ambient dimension");
  const int d = t.d;

  // Gap pre-check on eigenvalue moduli: without a gap at some dim of t the
  // iteration has no well-defined limit there.
  Eigen::EigenSolver<Eigen::MatrixXd> eig(g);
  std::vector<double> moduli(d);
  for (int i = 0; i < d; ++i) moduli[i] = std::abs(eig.eigenvalues()(i));
  std::sort(moduli.rbegin(), moduli.rend());
  for (int k : t.dims) {
    double hi = moduli[k - 1], lo = moduli[k];
    if (!(hi > 0) || std::log(hi / std::max(lo, std::numeric_limits<double>::min())) <= policy().gap_floor)
      throw NoGap("eigenvalue-modulus gap at a requested dim is below the floor");
  }

  // Left singular vectors of a moderate power seed the modulus ordering; raw
  // powers beyond that collapse in floating point (sigma ratios underflow
  // machine precision), so the refinement uses QR-based orthogonal iteration,
  // which keeps every stage orthonormal and is stable indefinitely.
  Eigen::MatrixXd a = g / g.norm();
  for (int i = 1; i < 8; ++i) {
    a = g * a;
    a /= a.norm();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> seed_svd(a, Eigen::ComputeFullU);
  Flag current{seed_svd.matrixU(), t};
  // Per-iteration progress only needs a cheap overestimate of how far the
  // tracked stage prefixes moved; the projection-residual Frobenius form
  // avoids both a decomposition per step and the cancellation floor of
  // Gram-based angle sums. Large-norm input still leaves a rounding-noise
  // floor above any fixed threshold, so iteration also stops once eight
  // consecutive steps fail to improve on the best step seen.
  auto stage_step = [&t](const Flag& f, const Flag& h) {
    double s = 0.0;
    for (int k : t.dims) {
      auto fk = f.basis.leftCols(k);
      auto hk = h.basis.leftCols(k);
      s = std::max(s, (hk - fk * (fk.transpose() * hk)).norm());
    }
    return s;
  };
  double best_step = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int n = 0; n < 20000; ++n) {
    Flag next{orthonormalize(g * current.basis), t};
    double step = stage_step(current, next);
    current = std::move(next);
    if (step < 1e-14) break;
    if (step < best_step * 0.99) {
      best_step = step;
      stalled = 0;
    } else if (++stalled >= 8) {
      break;
    }
  }
  // Deterministic column signs: largest-magnitude entry of each column positive.
  for (int j = 0; j < d; ++j) {
    int arg = 0;
    current.basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (current.basis(arg, j) < 0) current.basis.col(j) = -current.basis.col(j);
  }
  return current;
}

GapVector singular_gaps(const Eigen::MatrixXd& g, const FlagType& t) {
  t.validate();
  if (g.rows() != t.d || g.cols() != t.d)
    throw TypeMismatch("matrix does not match the flag type's ambient dimension");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  const auto& sv = svd.singularValues();
  GapVector out;
  for (int k : t.dims) {
    double hi = sv(k - 1), lo = sv(k);
    if (lo <= 0.0)
      out.gaps.push_back(std::numeric_limits<double>::infinity());
    else
      out.gaps.push_back(std::max(0.0, std::log(hi / lo)));
  }
  return out;
}

double min_gap(const GapVector& v) {
  if (v.gaps.empty()) throw ConfigInvalid("gap vector is empty");
  return *std::min_element(v.gaps.begin(), v.gaps.end());
}

double set_membership_margin(const FlagSet& s, const Flag& f) {
  if (s.net.empty()) throw EmptyNet("membership margin needs a nonempty net");
  double nearest = std::numeric_limits<double>::infinity();
  for (const Flag& p : s.net) nearest = std::min(nearest, flag_distance(f, p));
  return s.r - nearest;
}

double set_diameter(const FlagSet& s) {
  if (s.net.empty()) throw EmptyNet("diameter needs a nonempty net");
  double spread = 0.0;
  for (size_t i = 0; i < s.net.size(); ++i)
    for (size_t j = i + 1; j < s.net.size(); ++j)
      spread = std::max(spread, flag_distance(s.net[i], s.net[j]));
  return spread + 2.0 * s.r;
}

nlohmann::ordered_json flag_to_json(const Flag& f) {
  nlohmann::ordered_json j;
  j["d"] = f.type.d;
  j["dims"] = f.type.dims;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < f.basis.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < f.basis.cols(); ++c) row.push_back(f.basis(i, c));
    rows.push_back(std::move(row));
  }
  j["basis"] = std::move(rows);
  return j;
}

Flag flag_from_json(const nlohmann::json& j) {
  FlagType t;
  t.d = j.at("d").get<int>();
  t.dims = j.at("dims").get<std::vector<int>>();
  t.validate();
  Eigen::MatrixXd b(t.d, t.d);
  const auto& rows = j.at("basis");
  if ((int)rows.size() != t.d) throw ConfigInvalid("flag basis row count does not match d");
  for (int i = 0; i < t.d; ++i) {
    if ((int)rows[i].size() != t.d) throw ConfigInvalid("flag basis column count does not match d");
    for (int c = 0; c < t.d; ++c) b(i, c) = rows[i][c].get<double>();
  }
  return make_flag(b, t);
}

nlohmann::ordered_json flag_set_to_json(const FlagSet& s) {
  nlohmann::ordered_json j;
  j["label"] = s.label;
  j["r"] = s.r;
  if (!s.net.empty()) {
    j["d"] = s.net.front().type.d;
    j["dims"] = s.net.front().type.dims;
  }
  nlohmann::ordered_json net = nlohmann::ordered_json::array();
  for (const Flag& f : s.net) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int i = 0; i < f.basis.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int c = 0; c < f.basis.cols(); ++c) row.push_back(f.basis(i, c));
      rows.push_back(std::move(row));
    }
    net.push_back(std::move(rows));
  }
  j["net"] = std::move(net);
  return j;
}

FlagSet flag_set_from_json(const nlohmann::json& j) {
  FlagSet s;
  s.label = j.value("label", std::string());
  s.r = j.at("r").get<double>();
  if (j.at("net").empty()) return s;
  FlagType t;
  t.d = j.at("d").get<int>();
  t.dims = j.at("dims").get<std::vector<int>>();
  t.validate();
  for (const auto& rows : j.at("net")) {
    Eigen::MatrixXd b(t.d, t.d);
    for (int i = 0; i < t.d; ++i)
      for (int c = 0; c < t.d; ++c) b(i, c) = rows[i][c].get<double>();
    s.net.push_back(make_flag(b, t));
  }
  return s;
}

namespace {

// Every stage margin is sigma_min of an orthonormal concatenation, which is
// sqrt(1 - sigma_max^2) in principal-angle terms; sigma_max is at most the
// Frobenius norm of the cross block, giving a cheap lower bound that lets the
// scan skip pairs that cannot lower the running minimum.
double cross_margin_lower_bound(const Flag& f, const Flag& g) {
  Eigen::MatrixXd cross = f.basis.transpose() * g.basis;
  const int d = f.d();
  double bound = std::numeric_limits<double>::infinity();
  for (int k : f.type.dims) {
    double fro = cross.topLeftCorner(k, d - k).norm();
    bound = std::min(bound, std::sqrt(std::max(0.0, 1.0 - fro)));
  }
  return bound;
}

}  // namespace

double min_antipodality_margin(const std::vector<Flag>& xs, const std::vector<Flag>& ys, int* xi,
                               int* yi) {
  if (xs.empty() || ys.empty()) throw EmptyNet("antipodality scan needs nonempty nets");
  double worst = std::numeric_limits<double>::infinity();
  int best_x = -1, best_y = -1;
  const FlagType& t = xs.front().type;
  const bool plane_line = (t.d == 3 && t.dims.size() == 2);
  if (plane_line && ys.front().type == t) {
    // Full flags in R^3: the stage margins reduce to a closed form in the
    // line/normal dot products, monotone in their magnitude, so only pairs
    // crossing a derived dot threshold pay for an exact decomposition.
    auto pack = [](const std::vector<Flag>& v, std::vector<double>& lines,
                   std::vector<double>& normals) {
      lines.resize(3 * v.size());
      normals.resize(3 * v.size());
      for (size_t i = 0; i < v.size(); ++i)
        for (int r = 0; r < 3; ++r) {
          lines[3 * i + r] = v[i].basis(r, 0);
          normals[3 * i + r] = v[i].basis(r, 2);
        }
    };
    std::vector<double> lx, nx, ly, ny;
    pack(xs, lx, nx);
    pack(ys, ly, ny);
    auto dot_threshold = [](double margin) {
      if (!std::isfinite(margin)) return 2.0;
      double s = 1.0 - margin * margin;
      return (1.0 - s * s) * (1.0 + 1e-6) + 1e-13;
    };
    double threshold = dot_threshold(worst);
    for (size_t i = 0; i < xs.size(); ++i) {
      const double* li = &lx[3 * i];
      const double* ni = &nx[3 * i];
      for (size_t j = 0; j < ys.size(); ++j) {
        const double* lj = &ly[3 * j];
        const double* nj = &ny[3 * j];
        double u = li[0] * nj[0] + li[1] * nj[1] + li[2] * nj[2];
        double v = lj[0] * ni[0] + lj[1] * ni[1] + lj[2] * ni[2];
        if (std::min(u * u, v * v) > threshold) continue;
        double exact = antipodality_margin(xs[i], ys[j]);
        if (exact < worst) {
          worst = exact;
          best_x = static_cast<int>(i);
          best_y = static_cast<int>(j);
          threshold = dot_threshold(worst);
        }
      }
    }
  } else {
    for (size_t i = 0; i < xs.size(); ++i)
      for (size_t j = 0; j < ys.size(); ++j) {
        if (cross_margin_lower_bound(xs[i], ys[j]) > worst * (1.0 + 1e-6) + 1e-13) continue;
        double exact = antipodality_margin(xs[i], ys[j]);
        if (exact < worst) {
          worst = exact;
          best_x = static_cast<int>(i);
          best_y = static_cast<int>(j);
        }
      }
  }
  if (xi) *xi = best_x;
  if (yi) *yi = best_y;
  return worst;
}

std::string flag_set_to_csv(const FlagSet& s) {
  std::ostringstream out;
  out << "label,index";
  if (!s.net.empty()) {
    int d = s.net.front().type.d;
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c) out << ",b" << i << c;
  }
  out << "\n";
  out.precision(17);
  for (size_t n = 0; n < s.net.size(); ++n) {
    out << s.label << "," << n;
    const Eigen::MatrixXd& b = s.net[n].basis;
    for (int i = 0; i < b.rows(); ++i)
      for (int c = 0; c < b.cols(); ++c) out << "," << b(i, c);
    out << "\n";
  }
  return out.str();
}

}  // namespace amalgam::flags
