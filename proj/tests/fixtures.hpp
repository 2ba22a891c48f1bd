#pragma once

// Shared algebraic fixtures for the test suites. Everything here is exact.

#include <vector>

#include "amalgam/words.hpp"

namespace fixtures {

using amalgam::ExactMatrix;
using amalgam::GroupMatrix;

inline GroupMatrix exact2(long long a, long long b, long long c, long long d) {
  return GroupMatrix(ExactMatrix::from_int_rows({{a, b}, {c, d}}));
}

// SL(2,Z) = Z/4 *_{Z/2} Z/6 with S = [[0,-1],[1,0]] (order 4),
// U = [[0,-1],[1,1]] (order 6), amalgamated over {+-I} = <S^2> = <U^3>.
inline amalgam::words::AmalgamPresentation sl2z_amalgam() {
  amalgam::words::AmalgamPresentation p;
  p.a.gen_names = {"S"};
  p.a.gens = {exact2(0, -1, 1, 0)};
  p.a.budget = 8;
  p.b.gen_names = {"U"};
  p.b.gens = {exact2(0, -1, 1, 1)};
  p.b.budget = 12;
  p.h.gen_names = {"-1"};
  p.h.gens = {exact2(-1, 0, 0, -1)};
  p.h.words_in_a = {{1, 1}};     // S^2
  p.h.words_in_b = {{1, 1, 1}};  // U^3
  p.h.budget = 8;
  p.validate();
  return p;
}

// Baumslag-Solitar BS(1,2) = <a, f | f a f^-1 = a^2> with a = [[1,1],[0,1]],
// f = [[2,0],[0,1]]. Associated subgroups: H_- = <a> (all of M), H_+ = <a^2>.
inline amalgam::words::HnnPresentation bs12() {
  amalgam::words::HnnPresentation p;
  p.m.gen_names = {"a"};
  p.m.gens = {exact2(1, 1, 0, 1)};
  p.m.free_group = true;  // infinite cyclic: freely reduced words are canonical
  p.m.budget = 600;
  p.stable = exact2(2, 0, 0, 1);
  p.h_minus.gen_names = {"a"};
  p.h_minus.gens = {exact2(1, 1, 0, 1)};
  p.h_minus.words_in_m = {{1}};
  p.h_minus.budget = 600;
  p.h_plus.gen_names = {"a^2"};
  p.h_plus.gens = {exact2(1, 2, 0, 1)};
  p.h_plus.words_in_m = {{1, 1}};
  p.h_plus.budget = 600;
  p.validate();
  return p;
}

// Free group of rank 2 (Sanov): [[1,2],[0,1]] and [[1,0],[2,1]].
inline std::vector<GroupMatrix> sanov_gens() {
  return {exact2(1, 2, 0, 1), exact2(1, 0, 2, 1)};
}

// The four elements of the Z/4 factor of the SL(2,Z) amalgam.
inline std::vector<GroupMatrix> z4_elements() {
  return {exact2(1, 0, 0, 1), exact2(0, -1, 1, 0), exact2(-1, 0, 0, -1), exact2(0, 1, -1, 0)};
}

}  // namespace fixtures
