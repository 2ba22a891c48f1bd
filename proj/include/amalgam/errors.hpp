#pragma once

#include <stdexcept>
#include <string>

namespace amalgam {

// Base for all library errors so callers can catch one type at the CLI edge.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Subgroup ball hit its budget without closing, so "not found" is not "no".
struct MembershipUndecidable : Error {
  explicit MembershipUndecidable(const std::string& what) : Error(what) {}
};

// A syllable's element does not lie in the factor it is tagged with.
struct FactorMismatch : Error {
  explicit FactorMismatch(const std::string& what) : Error(what) {}
};

// Alternating-sequence letter violates the required freeness/sign conditions.
struct LetterRejected : Error {
  explicit LetterRejected(const std::string& what) : Error(what) {}
};

// Distance or projection query left the enumerated ball.
struct OutOfBall : Error {
  explicit OutOfBall(const std::string& what) : Error(what) {}
};

// Flag type disagreement (dimension signature or ambient dimension).
struct TypeMismatch : Error {
  explicit TypeMismatch(const std::string& what) : Error(what) {}
};

struct Singular : Error {
  explicit Singular(const std::string& what) : Error(what) {}
};

// Eigenvalue/singular-value gap at a requested dimension below the floor.
struct NoGap : Error {
  explicit NoGap(const std::string& what) : Error(what) {}
};

struct NotInCentralizer : Error {
  explicit NotInCentralizer(const std::string& what) : Error(what) {}
};

struct UnboundGenerator : Error {
  explicit UnboundGenerator(const std::string& what) : Error(what) {}
};

struct SceneInvalid : Error {
  explicit SceneInvalid(const std::string& what) : Error(what) {}
};

struct NotNested : Error {
  explicit NotNested(const std::string& what) : Error(what) {}
};

// Circular order of boundary shadows unavailable (no 2x2 shadow data).
struct OrderUnavailable : Error {
  explicit OrderUnavailable(const std::string& what) : Error(what) {}
};

struct EmptyNet : Error {
  explicit EmptyNet(const std::string& what) : Error(what) {}
};

struct ConfigInvalid : Error {
  explicit ConfigInvalid(const std::string& what) : Error(what) {}
};

}  // namespace amalgam
