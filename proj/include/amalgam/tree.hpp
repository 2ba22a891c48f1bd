#pragma once

#include <string>
#include <vector>

#include "amalgam/words.hpp"

namespace amalgam::tree {

// A vertex of the Bass-Serre tree of a splitting. For an amalgam the vertex
// set is the disjoint union of the coset families {g FactorA} and {g FactorB};
// for an HNN extension it is {g M}. Vertices carry a canonical coset
// representative so that equality is a string comparison on `key`.
struct TreeVertex {
  bool hnn = false;
  words::Factor side = words::Factor::A;  // coset family (A/B); M for HNN
  words::NormalForm rep;                  // canonical representative, empty at the base
  std::string key;

  bool operator==(const TreeVertex& o) const { return hnn == o.hnn && key == o.key; }
  bool operator!=(const TreeVertex& o) const { return !(*this == o); }
};

// Canonical form of a group element: every proper prefix of the syllable
// sequence is replaced by the least representative of its edge-subgroup coset
// (order: generator-word length, then lex, then matrix key), the last syllable
// absorbing whatever correction that leaves. Two words evaluate to the same
// element iff their canonical forms agree syllable-by-syllable (within the
// edge-subgroup ball that the oracle can enumerate).
words::NormalForm canonical_element(const words::NormalForm& nf,
                                    const words::AmalgamPresentation& p);
words::NormalForm canonical_element(const words::NormalForm& nf, const words::HnnPresentation& p);

// Vertex g*Factor(side) for the element described by nf (amalgam), or g*M
// (HNN). The trailing syllable lying in the coset's own group is absorbed and
// every remaining syllable is coset-minimised as in canonical_element.
TreeVertex vertex_of(const words::NormalForm& nf, words::Factor side,
                     const words::AmalgamPresentation& p);
TreeVertex vertex_of(const words::NormalForm& nf, const words::HnnPresentation& p);

// Base vertices: the coset of the identity in the given family.
TreeVertex base_vertex(words::Factor side, const words::AmalgamPresentation& p);
TreeVertex base_vertex(const words::HnnPresentation& p);

// Exact tree distance, computed from the normal form of rep(v)^-1 * rep(w).
int tree_distance(const TreeVertex& v, const TreeVertex& w, const words::AmalgamPresentation& p);
int tree_distance(const TreeVertex& v, const TreeVertex& w, const words::HnnPresentation& p);

// The geodesic the normal form spells out, starting at a base vertex and
// ending at the vertex of the element. Amalgam paths alternate coset
// families and begin with the base vertex opposite the first syllable's
// factor; HNN paths step once per stable letter.
std::vector<TreeVertex> normal_form_path(const words::NormalForm& nf,
                                         const words::AmalgamPresentation& p);
std::vector<TreeVertex> normal_form_path(const words::NormalForm& nf,
                                         const words::HnnPresentation& p);

}  // namespace amalgam::tree
