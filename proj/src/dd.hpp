#pragma once

// Chernikova-style double description conversion on homogeneous cones.
// Internal to the polyhedra kernel; works on dense integer vectors where
// coordinate 0 is the homogenizing coordinate.

#include <gmpxx.h>

#include <cstddef>
#include <vector>

namespace polybound::dd {

using Vec = std::vector<mpz_class>;

struct Gens {
  std::vector<Vec> lines;
  std::vector<Vec> rays;
};

mpz_class dot(const Vec& a, const Vec& b);

// Divide by the content gcd; leaves the zero vector alone.
void normalize(Vec& v);

// Thrown when an intermediate ray system outgrows the budget; callers fall
// back to a coarser but sound description.
struct ConversionLimitExceeded {};

inline constexpr std::size_t kDefaultRayBudget = 20000;

// Minimal generator system (lines, rays) of the cone
//   { x in R^width : eq . x = 0 for all eq, ineq . x >= 0 for all ineq }.
// Rows may be redundant or repeated. The result is empty (no lines, no
// rays) iff the cone is {0}.
Gens convert(const std::vector<Vec>& eqs, const std::vector<Vec>& ineqs,
             std::size_t width, std::size_t ray_budget = kDefaultRayBudget);

}  // namespace polybound::dd
