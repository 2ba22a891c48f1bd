#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "amalgam/words.hpp"
#include "json.hpp"

namespace amalgam::cayley {

// Bounded ball in the Cayley graph of an exact matrix group. Elements within
// `radius` are stored with canonical shortest words; a lean second sweep out
// to `lookup_radius` (default 2*radius) records norms only, which makes every
// pairwise distance between primary-ball elements exact.
class CayleyBall {
 public:
  CayleyBall(std::vector<GroupMatrix> generators, std::vector<std::string> names, int radius,
             int lookup_radius = -1, const CompareOptions& cmp = {});

  int radius() const { return radius_; }
  int lookup_radius() const { return lookup_radius_; }
  int dim() const { return dim_; }
  const std::vector<GroupMatrix>& generators() const { return gens_; }
  const std::vector<std::string>& generator_names() const { return names_; }

  size_t size() const { return ball_.elts.size(); }
  const GroupMatrix& element(size_t i) const { return ball_.elts[i]; }
  const words::FreeWord& word(size_t i) const { return ball_.word_of[i]; }
  GroupMatrix eval(const words::FreeWord& w) const;

  // Index in the primary ball, -1 if absent.
  int index_of(const GroupMatrix& g) const;
  bool contains(const GroupMatrix& g) const { return index_of(g) >= 0; }

  // Word-metric norm |g|; throws OutOfBall beyond the lookup radius.
  int norm(const GroupMatrix& g) const;
  std::optional<int> norm_within(const GroupMatrix& g) const;
  int distance(const GroupMatrix& x, const GroupMatrix& y) const;
  std::optional<int> distance_within(const GroupMatrix& x, const GroupMatrix& y) const;

  // (f,g)_w = (d(f,w) + d(g,w) - d(f,g)) / 2; f, g, w must lie in the primary
  // ball so that all three distances are exact.
  double gromov_product(const GroupMatrix& f, const GroupMatrix& g, const GroupMatrix& w) const;

  // The canonical geodesic from x to y: at each step take the first generator
  // (in the canonical letter order) that decreases the distance to y.
  std::vector<GroupMatrix> geodesic(const GroupMatrix& x, const GroupMatrix& y) const;

  // Largest defect of the four-point hyperbolicity inequality
  //   (x,z)_w >= min((x,y)_w, (y,z)_w) - delta
  // over all quadruples in the sub-ball of the given radius. O(n^4); cached.
  double delta(int sub_radius = 3) const;

  nlohmann::ordered_json stats_json() const;

 private:
  std::vector<GroupMatrix> gens_;
  std::vector<std::string> names_;
  int radius_ = 0;
  int lookup_radius_ = 0;
  int dim_ = 0;
  CompareOptions cmp_;
  words::Ball ball_;
  std::unordered_map<std::string, int> norm_of_;
  mutable std::map<int, double> delta_cache_;
};

// The part of a finitely generated subgroup that meets the primary ball,
// enumerated to `depth` subgroup letters (distorted elements deeper than that
// are not seen). Elements are kept in ball order: norm, then canonical word.
struct SubgroupTrace {
  std::string label;
  std::vector<GroupMatrix> elements;
  std::vector<words::FreeWord> ball_words;  // canonical words in the ambient generators

  bool empty() const { return elements.empty(); }
  size_t size() const { return elements.size(); }
};

SubgroupTrace subgroup_trace(const CayleyBall& ball, const std::vector<GroupMatrix>& sub_gens,
                             const std::string& label, int depth = -1);

// Minimum distance from g to the trace.
int distance_to_trace(const CayleyBall& ball, const GroupMatrix& g, const SubgroupTrace& y);

// Index into y.elements of the nearest point, ties resolved by the stored
// (norm, lexicographic) order.
size_t nearest_point_projection_index(const CayleyBall& ball, const GroupMatrix& g,
                                      const SubgroupTrace& y);
const GroupMatrix& nearest_point_projection(const CayleyBall& ball, const GroupMatrix& g,
                                            const SubgroupTrace& y);

// d(pr_Y(g), 1) = |pr_Y(g)|.
int projection_displacement(const CayleyBall& ball, const GroupMatrix& g, const SubgroupTrace& y);

// min_n (s1[n], s2[n])_1: how long two sequences stay close.
double fellow_travel_margin(const CayleyBall& ball, const std::vector<GroupMatrix>& s1,
                            const std::vector<GroupMatrix>& s2);

// Max distance from any vertex of any trace-to-trace canonical geodesic back
// to the trace: the measured quasiconvexity constant of the trace in the ball.
int quasiconvexity_constant(const CayleyBall& ball, const SubgroupTrace& y);

}  // namespace amalgam::cayley
