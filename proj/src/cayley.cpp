#include "amalgam/cayley.hpp"

#include <algorithm>
#include <deque>

#include "amalgam/errors.hpp"

namespace amalgam::cayley {

using words::FreeWord;

CayleyBall::CayleyBall(std::vector<GroupMatrix> generators, std::vector<std::string> names,
                       int radius, int lookup_radius, const CompareOptions& cmp)
    : gens_(std::move(generators)),
      names_(std::move(names)),
      radius_(radius),
      lookup_radius_(lookup_radius < 0 ? 2 * radius : lookup_radius),
      cmp_(cmp) {
  if (gens_.empty()) throw ConfigInvalid("a Cayley ball needs at least one generator");
  if (names_.size() != gens_.size())
    throw ConfigInvalid("generator names must match the generator list");
  for (const GroupMatrix& g : gens_)
    if (!g.is_exact())
      throw TypeMismatch("Cayley balls need exact matrix groups for canonical hashing");
  if (lookup_radius_ < radius_) throw ConfigInvalid("lookup radius below the ball radius");
  dim_ = gens_[0].dim();

  ball_ = words::enumerate_ball(gens_, radius_, cmp_, /*max_elements=*/10u << 20);

  // Norm-only sweep to the lookup radius: matrices are kept per frontier level
  // only, the map stores canonical keys.
  std::deque<GroupMatrix> frontier{GroupMatrix::identity(dim_, true)};
  norm_of_.emplace(frontier.front().key(), 0);
  std::vector<GroupMatrix> alphabet;
  for (int i : words::signed_alphabet(static_cast<int>(gens_.size())))
    alphabet.push_back(i > 0 ? gens_[i - 1] : gens_[-i - 1].inverse());
  for (int level = 1; level <= lookup_radius_ && !frontier.empty(); ++level) {
    std::deque<GroupMatrix> next;
    for (const GroupMatrix& base : frontier) {
      for (const GroupMatrix& s : alphabet) {
        GroupMatrix g = base * s;
        if (norm_of_.emplace(g.key(), level).second) next.push_back(std::move(g));
      }
    }
    frontier = std::move(next);
  }
}

GroupMatrix CayleyBall::eval(const FreeWord& w) const {
  GroupMatrix g = GroupMatrix::identity(dim_, true);
  for (int x : w) {
    const size_t i = static_cast<size_t>(std::abs(x)) - 1;
    if (x == 0 || i >= gens_.size()) throw UnboundGenerator("generator index out of range");
    g = g * (x > 0 ? gens_[i] : gens_[i].inverse());
  }
  return g;
}

int CayleyBall::index_of(const GroupMatrix& g) const { return ball_.find(g, cmp_); }

std::optional<int> CayleyBall::norm_within(const GroupMatrix& g) const {
  const auto it = norm_of_.find(g.key());
  if (it == norm_of_.end()) return std::nullopt;
  return it->second;
}

int CayleyBall::norm(const GroupMatrix& g) const {
  const std::optional<int> n = norm_within(g);
  if (!n) throw OutOfBall("element beyond the distance-lookup radius");
  return *n;
}

std::optional<int> CayleyBall::distance_within(const GroupMatrix& x, const GroupMatrix& y) const {
  return norm_within(x.inverse() * y);
}

int CayleyBall::distance(const GroupMatrix& x, const GroupMatrix& y) const {
  const std::optional<int> d = distance_within(x, y);
  if (!d) throw OutOfBall("pair distance beyond the lookup radius");
  return *d;
}

double CayleyBall::gromov_product(const GroupMatrix& f, const GroupMatrix& g,
                                  const GroupMatrix& w) const {
  if (!contains(f) || !contains(g) || !contains(w))
    throw OutOfBall("Gromov product arguments must lie in the primary ball");
  return 0.5 * (distance(f, w) + distance(g, w) - distance(f, g));
}

std::vector<GroupMatrix> CayleyBall::geodesic(const GroupMatrix& x, const GroupMatrix& y) const {
  int d = distance(x, y);
  std::vector<GroupMatrix> path{x};
  GroupMatrix v = x;
  const std::vector<int> alphabet = words::signed_alphabet(static_cast<int>(gens_.size()));
  while (d > 0) {
    bool stepped = false;
    for (int sig : alphabet) {
      const size_t i = static_cast<size_t>(std::abs(sig)) - 1;
      GroupMatrix next = v * (sig > 0 ? gens_[i] : gens_[i].inverse());
      const std::optional<int> nd = distance_within(next, y);
      if (nd && *nd == d - 1) {
        v = std::move(next);
        path.push_back(v);
        d = *nd;
        stepped = true;
        break;
      }
    }
    if (!stepped) throw OutOfBall("geodesic descent left the lookup radius");
  }
  return path;
}

double CayleyBall::delta(int sub_radius) const {
  const auto it = delta_cache_.find(sub_radius);
  if (it != delta_cache_.end()) return it->second;
  if (2 * sub_radius > lookup_radius_)
    throw OutOfBall("delta sub-ball pair distances exceed the lookup radius");

  std::vector<size_t> pts;
  for (size_t i = 0; i < ball_.elts.size(); ++i)
    if (static_cast<int>(ball_.word_of[i].size()) <= sub_radius) pts.push_back(i);
  const size_t n = pts.size();
  std::vector<int> dmat(n * n, 0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      const int d = distance(ball_.elts[pts[i]], ball_.elts[pts[j]]);
      dmat[i * n + j] = d;
      dmat[j * n + i] = d;
    }
  auto gp = [&](size_t a, size_t b, size_t w) {
    return dmat[a * n + w] + dmat[b * n + w] - dmat[a * n + b];  // doubled product
  };
  int worst2 = 0;  // doubled defect, to stay integral
  for (size_t w = 0; w < n; ++w)
    for (size_t x = 0; x < n; ++x)
      for (size_t y = 0; y < n; ++y)
        for (size_t z = 0; z < n; ++z) {
          const int lhs = gp(x, z, w);
          const int rhs = std::min(gp(x, y, w), gp(y, z, w));
          worst2 = std::max(worst2, rhs - lhs);
        }
  const double delta = 0.5 * worst2;
  delta_cache_.emplace(sub_radius, delta);
  return delta;
}

nlohmann::ordered_json CayleyBall::stats_json() const {
  nlohmann::ordered_json j;
  j["generators"] = names_;
  j["radius"] = radius_;
  j["lookup_radius"] = lookup_radius_;
  j["size"] = ball_.elts.size();
  std::vector<size_t> spheres(static_cast<size_t>(radius_) + 1, 0);
  for (const FreeWord& w : ball_.word_of) ++spheres[w.size()];
  j["sphere_sizes"] = spheres;
  j["complete"] = ball_.complete;
  if (!delta_cache_.empty()) {
    const auto& [r, d] = *delta_cache_.begin();
    j["delta"] = d;
    j["delta_sub_radius"] = r;
  }
  return j;
}

SubgroupTrace subgroup_trace(const CayleyBall& ball, const std::vector<GroupMatrix>& sub_gens,
                             const std::string& label, int depth) {
  if (depth < 0) depth = ball.radius();
  SubgroupTrace t;
  t.label = label;
  const words::Ball sub =
      words::enumerate_ball(sub_gens, depth, CompareOptions{}, /*max_elements=*/1u << 22);
  std::vector<int> indices;
  for (const GroupMatrix& g : sub.elts) {
    const int idx = ball.index_of(g);
    if (idx >= 0) indices.push_back(idx);
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  for (int idx : indices) {
    t.elements.push_back(ball.element(static_cast<size_t>(idx)));
    t.ball_words.push_back(ball.word(static_cast<size_t>(idx)));
  }
  return t;
}

int distance_to_trace(const CayleyBall& ball, const GroupMatrix& g, const SubgroupTrace& y) {
  if (y.empty()) throw EmptyNet("subgroup trace is empty");
  std::optional<int> best;
  for (const GroupMatrix& e : y.elements) {
    const std::optional<int> d = ball.distance_within(g, e);
    if (d && (!best || *d < *best)) best = *d;
  }
  if (!best) throw OutOfBall("no trace element within the lookup radius");
  return *best;
}

size_t nearest_point_projection_index(const CayleyBall& ball, const GroupMatrix& g,
                                      const SubgroupTrace& y) {
  if (y.empty()) throw EmptyNet("subgroup trace is empty");
  if (!ball.contains(g)) throw OutOfBall("projection argument outside the primary ball");
  std::optional<int> best;
  size_t best_i = 0;
  for (size_t i = 0; i < y.elements.size(); ++i) {
    const std::optional<int> d = ball.distance_within(g, y.elements[i]);
    // Stored order is (norm, lexicographic), so strict improvement keeps the
    // canonical tie-break.
    if (d && (!best || *d < *best)) {
      best = *d;
      best_i = i;
    }
  }
  if (!best) throw OutOfBall("no trace element within the lookup radius");
  return best_i;
}

const GroupMatrix& nearest_point_projection(const CayleyBall& ball, const GroupMatrix& g,
                                            const SubgroupTrace& y) {
  return y.elements[nearest_point_projection_index(ball, g, y)];
}

int projection_displacement(const CayleyBall& ball, const GroupMatrix& g,
                            const SubgroupTrace& y) {
  return ball.norm(nearest_point_projection(ball, g, y));
}

double fellow_travel_margin(const CayleyBall& ball, const std::vector<GroupMatrix>& s1,
                            const std::vector<GroupMatrix>& s2) {
  if (s1.size() != s2.size()) throw ConfigInvalid("fellow-travel sequences differ in length");
  if (s1.empty()) throw ConfigInvalid("fellow-travel sequences are empty");
  const GroupMatrix one = GroupMatrix::identity(ball.dim(), true);
  double margin = 0;
  for (size_t i = 0; i < s1.size(); ++i) {
    const double g = ball.gromov_product(s1[i], s2[i], one);
    margin = i == 0 ? g : std::min(margin, g);
  }
  return margin;
}

int quasiconvexity_constant(const CayleyBall& ball, const SubgroupTrace& y) {
  if (y.empty()) throw EmptyNet("subgroup trace is empty");
  int worst = 0;
  for (size_t i = 0; i < y.elements.size(); ++i)
    for (size_t j = 0; j < y.elements.size(); ++j) {
      if (i == j) continue;
      for (const GroupMatrix& v : ball.geodesic(y.elements[i], y.elements[j]))
        worst = std::max(worst, distance_to_trace(ball, v, y));
    }
  return worst;
}

}  // namespace amalgam::cayley
