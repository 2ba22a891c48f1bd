#include "amalgam/reps.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>

#include "amalgam/exact.hpp"

namespace amalgam::reps {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Coefficient list of (u x + v y)^n in the basis x^n, x^{n-1} y, ..., y^n.
template <typename T>
std::vector<T> binomial_coeffs(const T& u, const T& v, int n) {
  std::vector<T> c{T(1)};
  for (int step = 0; step < n; ++step) {
    std::vector<T> next(c.size() + 1, T(0));
    for (size_t r = 0; r < c.size(); ++r) {
      next[r] = next[r] + u * c[r];
      next[r + 1] = next[r + 1] + v * c[r];
    }
    c = std::move(next);
  }
  return c;
}

// Column j of the lift: coefficients of (a x + c y)^{n-j} (b x + d y)^j.
template <typename T, typename Mat, typename Get, typename Set>
void sym_lift_fill(const Get& get, const Set& set, Mat& out, int d) {
  const int n = d - 1;
  const T a = get(0, 0), b = get(0, 1), c = get(1, 0), dd = get(1, 1);
  for (int j = 0; j <= n; ++j) {
    std::vector<T> left = binomial_coeffs<T>(a, c, n - j);
    std::vector<T> right = binomial_coeffs<T>(b, dd, j);
    for (int i = 0; i <= n; ++i) {
      T acc(0);
      for (size_t r = 0; r < left.size(); ++r) {
        int s = i - (int)r;
        if (s >= 0 && s < (int)right.size()) acc = acc + left[r] * right[s];
      }
      set(out, i, j, acc);
    }
  }
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

// Real eigen data of a 2x2 with real split spectrum; throws OrderUnavailable
// otherwise. Returns (lambda, eigenvector) for the attracting or repelling
// fixed direction.
std::pair<double, Eigen::Vector2d> split_eigen(const Eigen::MatrixXd& m, bool attracting) {
  if (m.rows() != 2 || m.cols() != 2) throw TypeMismatch("boundary data needs a 2x2 matrix");
  double tr = m(0, 0) + m(1, 1), det = m.determinant();
  double disc = tr * tr - 4.0 * det;
  if (disc <= 1e-12 * std::max(tr * tr, 1.0))
    throw OrderUnavailable("shadow element has no real axis");
  double root = std::sqrt(disc);
  double lo = (tr - root) / 2.0, hi = (tr + root) / 2.0;
  double lambda = (std::abs(hi) >= std::abs(lo)) == attracting ? hi : lo;
  Eigen::Vector2d v1(m(0, 1), lambda - m(0, 0));
  Eigen::Vector2d v2(lambda - m(1, 1), m(1, 0));
  Eigen::Vector2d v = v1.norm() >= v2.norm() ? v1 : v2;
  if (v.norm() < 1e-12 * std::max(std::abs(lambda), 1.0))
    throw OrderUnavailable("shadow element is too close to scalar");
  return {lambda, v / v.norm()};
}

double angle_of_direction(const Eigen::Vector2d& v) {
  std::complex<double> z(v(0), -v(1)), w(v(0), v(1));
  return std::arg(z / w);
}

// Sound cheap rejection for the 1e-6 dedup: if the first-stage projector
// difference already exceeds the threshold in Frobenius norm (scaled by the
// rank bound), the full flag distance does too.
bool surely_farther(const flags::Flag& f, const flags::Flag& g, double tol) {
  int k = f.type.dims.front();
  double cross = (f.basis.leftCols(k).transpose() * g.basis.leftCols(k)).squaredNorm();
  return (k - cross) > k * tol * tol;
}

}  // namespace

bool MatrixRep::exact() const {
  for (const GroupMatrix& g : gens)
    if (!g.is_exact()) return false;
  return true;
}

int MatrixRep::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return (int)i;
  return -1;
}

const GroupMatrix& MatrixRep::at(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) throw UnboundGenerator("no generator named '" + name + "'");
  return gens[i];
}

void MatrixRep::validate(double det_tol) const {
  if (names.size() != gens.size()) throw ConfigInvalid("generator names and matrices differ in count");
  for (const GroupMatrix& g : gens) {
    if (g.dim() != dim) throw TypeMismatch("generator dimension differs from the rep dimension");
    if (g.is_exact()) {
      Rat det = g.exact().det();
      if (det != 1 && det != -1) throw ConfigInvalid("exact generator determinant is not +-1");
    } else if (std::abs(std::abs(g.approx().determinant()) - 1.0) > det_tol) {
      throw ConfigInvalid("generator determinant is not +-1 within tolerance");
    }
  }
}

GroupMatrix evaluate(const MatrixRep& rep, const words::FreeWord& w) {
  GroupMatrix out = GroupMatrix::identity(rep.dim, rep.exact());
  for (int letter : w) {
    int idx = std::abs(letter) - 1;
    if (letter == 0 || idx >= (int)rep.gens.size())
      throw UnboundGenerator("word letter has no bound generator");
    out = out * (letter > 0 ? rep.gens[idx] : rep.gens[idx].inverse());
  }
  return out;
}

GroupMatrix evaluate(const MatrixRep& rep, const std::vector<std::pair<std::string, int>>& named) {
  words::FreeWord w;
  for (const auto& [name, exp] : named) {
    int idx = rep.index_of(name);
    if (idx < 0) throw UnboundGenerator("no generator named '" + name + "'");
    for (int i = 0; i < std::abs(exp); ++i) w.push_back(exp > 0 ? idx + 1 : -(idx + 1));
  }
  return evaluate(rep, w);
}

GroupMatrix sym_power_lift(const GroupMatrix& m, int d) {
  if (m.dim() != 2) throw TypeMismatch("symmetric power lift starts from a 2x2 matrix");
  if (d < 2) throw ConfigInvalid("lift dimension must be at least 2");
  if (m.is_exact()) {
    const ExactMatrix& e = m.exact();
    ExactMatrix out(d);
    auto get = [&](int i, int j) { return e.at(i, j); };
    auto set = [](ExactMatrix& o, int i, int j, const Rat& v) { o.at(i, j) = v; };
    sym_lift_fill<Rat>(get, set, out, d);
    return GroupMatrix(out);
  }
  const Eigen::MatrixXd& a = m.approx();
  Eigen::MatrixXd out(d, d);
  auto get = [&](int i, int j) { return a(i, j); };
  auto set = [](Eigen::MatrixXd& o, int i, int j, double v) { o(i, j) = v; };
  sym_lift_fill<double>(get, set, out, d);
  return GroupMatrix(out);
}

MatrixRep lift_rep(const MatrixRep& rep, int d) {
  MatrixRep out;
  out.names = rep.names;
  out.dim = d;
  for (const GroupMatrix& g : rep.gens) out.gens.push_back(sym_power_lift(g, d));
  return out;
}

namespace {

// Rotation by theta about the point i of the upper half-plane.
Eigen::MatrixXd rotation_about_i(double theta) {
  return mat2(std::cos(theta / 2), std::sin(theta / 2), -std::sin(theta / 2),
              std::cos(theta / 2));
}

// Translation by hyperbolic length t along the imaginary axis.
Eigen::MatrixXd vertical_translation(double t) {
  return mat2(std::exp(t / 2), 0.0, 0.0, std::exp(-t / 2));
}

// Isometry carrying the octagon side centered in direction from*pi/4 onto the
// side centered in direction to*pi/4 while swapping the octagon with its
// exterior: rotate the source side to direction zero, half-turn about that
// side's midpoint (at distance rho from the center), rotate to the target.
Eigen::MatrixXd octagon_side_pairing(int from, int to, double rho) {
  const double step = std::numbers::pi / 4.0;
  return rotation_about_i(to * step) * vertical_translation(rho) * rotation_about_i(std::numbers::pi) *
         vertical_translation(-rho) * rotation_about_i(-from * step);
}

}  // namespace

MatrixRep fuchsian_genus2() {
  // Regular hyperbolic octagon centered at i with vertex angle pi/4, so all
  // eight vertices glue to one point with angle sum 2*pi. The apothem rho
  // comes from the right triangle (center, side midpoint, vertex) with
  // angles pi/8 at both ends: cosh(rho) = cot(pi/8) = 1 + sqrt(2). Reading
  // the boundary, the sides carry a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1; each
  // generator maps the side labeled with its inverse onto the side labeled
  // with itself, which closes the surface relator [a1,b1][a2,b2] to the
  // identity. All four generators share |trace| = 2 + sqrt(2).
  const double rho = std::acosh(1.0 + std::sqrt(2.0));
  MatrixRep rep;
  rep.names = {"a1", "b1", "a2", "b2"};
  rep.dim = 2;
  rep.gens = {GroupMatrix(octagon_side_pairing(2, 0, rho)),
              GroupMatrix(octagon_side_pairing(1, 3, rho)),
              GroupMatrix(octagon_side_pairing(6, 4, rho)),
              GroupMatrix(octagon_side_pairing(5, 7, rho))};
  rep.validate();
  return rep;
}

words::FreeWord genus2_separating_word() { return {1, 2, -1, -2}; }

words::FreeWord genus2_relator_word() { return {1, 2, -1, -2, 3, 4, -3, -4}; }

LoxodromicData axis_flags(const GroupMatrix& g, const flags::FlagType& t) {
  t.validate();
  if (g.dim() != t.d) throw TypeMismatch("matrix does not match the flag type's ambient dimension");
  Eigen::EigenSolver<Eigen::MatrixXd> eig(g.approx());
  std::vector<double> moduli(t.d);
  for (int i = 0; i < t.d; ++i) moduli[i] = std::abs(eig.eigenvalues()(i));
  std::sort(moduli.rbegin(), moduli.rend());
  for (int k : t.dims) {
    double hi = moduli[k - 1], lo = moduli[k];
    if (!(hi > 0) ||
        std::log(hi / std::max(lo, std::numeric_limits<double>::min())) <= flags::policy().gap_floor)
      throw NoGap("eigenvalue-modulus gap at a requested dim is below the floor");
  }
  LoxodromicData data;
  data.element = g;
  data.attracting = flags::attracting_flag(g.approx(), t);
  data.repelling = flags::attracting_flag(g.inverse().approx(), flags::opposition_involution(t));
  data.moduli = std::move(moduli);
  data.antipodality = flags::antipodality_margin(data.attracting, data.repelling);
  return data;
}

CentralizerChart centralizer_chart(const GroupMatrix& eta) {
  const int d = eta.dim();
  Eigen::EigenSolver<Eigen::MatrixXd> eig(eta.approx());
  double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < d; ++i) {
    if (std::abs(eig.eigenvalues()(i).imag()) > 1e-9 * std::max(scale, 1.0))
      throw ConfigInvalid("centralizer chart needs real eigenvalues");
    order.push_back({eig.eigenvalues()(i).real(), i});
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i + 1 < d; ++i)
    if (order[i].first - order[i + 1].first <= 1e-9 * std::max(scale, 1.0))
      throw ConfigInvalid("centralizer chart needs distinct eigenvalues");

  CentralizerChart chart;
  chart.eta = eta;
  chart.dim = d;
  chart.basis.resize(d, d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd v = eig.eigenvectors().col(order[i].second).real();
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    chart.basis.col(i) = v / v.norm();
  }
  chart.basis_inv = chart.basis.inverse();
  return chart;
}

GroupMatrix CentralizerChart::at(const std::vector<double>& s) const {
  if ((int)s.size() != dim - 1)
    throw ConfigInvalid("centralizer parameter must have dimension d - 1");
  Eigen::VectorXd diag(dim);
  double total = 0.0;
  for (int i = 0; i < dim - 1; ++i) {
    diag(i) = std::exp(s[i]);
    total += s[i];
  }
  diag(dim - 1) = std::exp(-total);
  return GroupMatrix(Eigen::MatrixXd(basis * diag.asDiagonal() * basis_inv));
}

MatrixRep bend(const MatrixRep& rep, const BendSplit& split, const GroupMatrix& t, double tol) {
  if (t.dim() != rep.dim) throw TypeMismatch("bending parameter dimension differs from the rep");
  GroupMatrix eta = evaluate(rep, split.edge_word);
  Eigen::MatrixXd defect = t.approx() * eta.approx() - eta.approx() * t.approx();
  double scale = std::max((eta.approx() * t.approx()).cwiseAbs().maxCoeff(), 1.0);
  if (defect.cwiseAbs().maxCoeff() > tol * scale)
    throw NotInCentralizer("bending parameter does not commute with the edge element");

  MatrixRep out = rep;
  if (split.hnn) {
    int idx = rep.index_of(split.stable);
    if (idx < 0) throw UnboundGenerator("no stable letter named '" + split.stable + "'");
    for (const std::string& name : split.fixed)
      if (rep.index_of(name) < 0) throw UnboundGenerator("no generator named '" + name + "'");
    out.gens[idx] = rep.gens[idx] * t;
  } else {
    GroupMatrix t_inv = t.inverse();
    for (const std::string& name : split.fixed)
      if (rep.index_of(name) < 0) throw UnboundGenerator("no generator named '" + name + "'");
    for (const std::string& name : split.moved) {
      int idx = rep.index_of(name);
      if (idx < 0) throw UnboundGenerator("no generator named '" + name + "'");
      out.gens[idx] = t * rep.gens[idx] * t_inv;
    }
  }
  return out;
}

LimitSetSample limit_set_sample(const MatrixRep& rep, int depth, const flags::FlagType& t) {
  t.validate();
  if (t.d != rep.dim) throw TypeMismatch("flag type does not match the rep dimension");
  if (depth < 1) throw ConfigInvalid("limit-set sampling needs depth >= 1");

  LimitSetSample sample;
  sample.type = t;
  const std::vector<int> alphabet = words::signed_alphabet((int)rep.gens.size());

  struct Node {
    words::FreeWord word;
    GroupMatrix elt;
  };
  std::vector<Node> level;
  for (int letter : alphabet) {
    words::FreeWord w{letter};
    level.push_back({w, evaluate(rep, w)});
  }
  const double tol = 1e-6;
  const int d = t.d;
  // When the first stage is a line, the cheapest sound duplicate filter is a
  // single dot product: the first-stage distance is exactly sqrt(1 - dot^2),
  // and the full flag distance can only be larger. Keeping the kept flags'
  // top directions in one flat array keeps the quadratic scan in cache.
  const bool line_first = !t.dims.empty() && t.dims[0] == 1;
  const double keep_dot2 = (1.0 - tol) * (1.0 + tol);  // 1 - tol^2
  std::vector<double> top_dirs;
  std::vector<double> candidate(d);
  for (int len = 1; len <= depth; ++len) {
    for (const Node& node : level) {
      std::optional<flags::Flag> f;
      try {
        f = flags::attracting_flag(node.elt.approx(), t);
      } catch (const NoGap&) {
        ++sample.skipped;
        continue;
      }
      bool fresh = true;
      if (line_first) {
        for (int r = 0; r < d; ++r) candidate[r] = f->basis(r, 0);
        for (size_t m = 0; m < sample.net.size(); ++m) {
          const double* dir = &top_dirs[(size_t)d * m];
          double dot = 0.0;
          for (int r = 0; r < d; ++r) dot += dir[r] * candidate[r];
          if (dot * dot < keep_dot2) continue;  // top lines already > tol apart
          if (flags::flag_distance(*f, sample.net[m]) < tol) {
            fresh = false;
            break;
          }
        }
      } else {
        for (const flags::Flag& seen : sample.net) {
          if (surely_farther(*f, seen, tol)) continue;
          if (flags::flag_distance(*f, seen) < tol) {
            fresh = false;
            break;
          }
        }
      }
      if (fresh) {
        if (line_first)
          for (int r = 0; r < d; ++r) top_dirs.push_back(f->basis(r, 0));
        sample.net.push_back(std::move(*f));
        sample.sources.push_back(node.word);
      }
    }
    if (len == depth) break;
    std::vector<Node> next;
    for (const Node& node : level)
      for (int letter : alphabet) {
        if (letter == -node.word.back()) continue;
        Node child;
        child.word = node.word;
        child.word.push_back(letter);
        int idx = std::abs(letter) - 1;
        child.elt = node.elt * (letter > 0 ? rep.gens[idx] : rep.gens[idx].inverse());
        next.push_back(std::move(child));
      }
    level = std::move(next);
  }
  return sample;
}

namespace {

// For orthonormal blocks F_k (d x k) and G_{d-k} (d x (d-k)), the smallest
// singular value of [F_k | G_{d-k}] equals sqrt(1 - sigma_max(F_k^T G_{d-k}))
// (principal angles). Since sigma_max <= Frobenius norm, each stage margin is
// at least sqrt(max(0, 1 - ||F_k^T G_{d-k}||_F)), which prunes pairs that
// cannot lower the running minimum without the cost of an exact decomposition.
double pair_margin_lower_bound(const flags::Flag& f, const flags::Flag& g) {
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

double min_pairwise_antipodality(const LimitSetSample& s) {
  if (!s.type.iota_invariant())
    throw TypeMismatch("pairwise antipodality needs an involution-invariant type");
  const size_t n = s.net.size();
  if (n < 2) throw EmptyNet("need at least two flags for pairwise margins");

  double worst = std::numeric_limits<double>::infinity();
  const bool plane_line = (s.type.d == 3 && s.type.dims.size() == 2);
  if (plane_line) {
    // Full flags in three dimensions: both stage products are single rows or
    // columns, so the stage margins are sqrt(1 - sqrt(1 - w^2)) with w the
    // dot product of one flag's top line against the other's plane normal.
    // That expression is monotone in |w|, so a pair can only lower the
    // current minimum when min(w_1^2, w_2^2) drops below a threshold derived
    // once per update; only those rare pairs pay for the exact decomposition.
    std::vector<double> lines(3 * n), normals(3 * n);
    for (size_t i = 0; i < n; ++i)
      for (int r = 0; r < 3; ++r) {
        lines[3 * i + r] = s.net[i].basis(r, 0);
        normals[3 * i + r] = s.net[i].basis(r, 2);
      }
    auto dot_threshold = [](double margin) {
      if (!std::isfinite(margin)) return 2.0;  // nothing found yet: check all
      double t = 1.0 - margin * margin;
      // Slack absorbs the closed form's rounding before it is trusted.
      return (1.0 - t * t) * (1.0 + 1e-6) + 1e-13;
    };
    double threshold = dot_threshold(worst);
    for (size_t i = 0; i < n; ++i) {
      const double* li = &lines[3 * i];
      const double* ni = &normals[3 * i];
      for (size_t j = i + 1; j < n; ++j) {
        const double* lj = &lines[3 * j];
        const double* nj = &normals[3 * j];
        double u = li[0] * nj[0] + li[1] * nj[1] + li[2] * nj[2];
        double v = lj[0] * ni[0] + lj[1] * ni[1] + lj[2] * ni[2];
        double w2 = std::min(u * u, v * v);
        if (w2 > threshold) continue;
        double exact = flags::antipodality_margin(s.net[i], s.net[j]);
        if (exact < worst) {
          worst = exact;
          threshold = dot_threshold(worst);
        }
      }
    }
    return worst;
  }

  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      if (pair_margin_lower_bound(s.net[i], s.net[j]) > worst * (1.0 + 1e-6) + 1e-13) continue;
      worst = std::min(worst, flags::antipodality_margin(s.net[i], s.net[j]));
    }
  return worst;
}

double boundary_angle(const GroupMatrix& m, bool attracting) {
  auto [lambda, v] = split_eigen(m.approx(), attracting);
  (void)lambda;
  return angle_of_direction(v);
}

std::vector<flags::FlagSet> arc_split(const LimitSetSample& sample, const MatrixRep& shadow,
                                      const std::vector<words::FreeWord>& cuts,
                                      const std::vector<std::string>& labels) {
  if (cuts.empty()) throw ConfigInvalid("arc split needs at least one cut element");
  if (labels.size() != 2 * cuts.size())
    throw ConfigInvalid("arc split needs one label per arc (two per cut element)");

  std::vector<double> cut_angles;
  for (const words::FreeWord& w : cuts) {
    GroupMatrix m = evaluate(shadow, w);
    cut_angles.push_back(boundary_angle(m, true));
    cut_angles.push_back(boundary_angle(m, false));
  }
  std::sort(cut_angles.begin(), cut_angles.end());
  const size_t arcs = cut_angles.size();

  std::vector<flags::FlagSet> out(arcs);
  for (size_t i = 0; i < arcs; ++i) {
    out[i].label = labels[i];
    out[i].r = 0.0;
  }

  // Arc i is the closed cyclic interval [cut_angles[i], cut_angles[i+1]];
  // the last arc wraps through +-pi. Points within 1e-9 of a cut satisfy the
  // closed test for both adjacent arcs and so land in both, as closed arcs
  // sharing endpoints should. Each arc's net is emitted in angular order
  // along the arc (ties broken by sample index) so that consumers can walk
  // the arc monotonically.
  auto at_most = [](double x, double y) { return x <= y + 1e-9; };
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::vector<std::pair<double, size_t>>> members(arcs);
  for (size_t n = 0; n < sample.net.size(); ++n) {
    double theta = boundary_angle(evaluate(shadow, sample.sources[n]), true);
    for (size_t i = 0; i < arcs; ++i) {
      double lo = cut_angles[i];
      bool inside;
      if (i + 1 < arcs)
        inside = at_most(lo, theta) && at_most(theta, cut_angles[i + 1]);
      else
        inside = at_most(lo, theta) || at_most(theta, cut_angles[0]);
      if (!inside) continue;
      double key = theta - lo;
      if (key < -1e-9) key += two_pi;
      members[i].push_back({key, n});
    }
  }
  for (size_t i = 0; i < arcs; ++i) {
    std::sort(members[i].begin(), members[i].end());
    out[i].net.reserve(members[i].size());
    for (const auto& [key, n] : members[i]) out[i].net.push_back(sample.net[n]);
  }
  return out;
}

}  // namespace amalgam::reps
