#include "dd.hpp"

#include <cassert>
#include <cstdint>
#include <utility>

namespace polybound::dd {

mpz_class dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  mpz_class acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && b[i] != 0) acc += a[i] * b[i];
  }
  return acc;
}

void normalize(Vec& v) {
  mpz_class g = 0;
  for (const auto& c : v) {
    if (c != 0) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
  }
  if (g <= 1) return;
  for (auto& c : v) c /= g;
}

namespace {

// Saturation sets are tracked per ray, one bit per processed inequality row.
struct SatSet {
  std::vector<uint64_t> bits;

  void set(std::size_t i) {
    std::size_t w = i / 64;
    if (w >= bits.size()) bits.resize(w + 1, 0);
    bits[w] |= uint64_t{1} << (i % 64);
  }
  static SatSet intersect(const SatSet& a, const SatSet& b) {
    SatSet r;
    std::size_t n = std::min(a.bits.size(), b.bits.size());
    r.bits.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.bits[i] = a.bits[i] & b.bits[i];
    return r;
  }
  bool contains(const SatSet& other) const {
    for (std::size_t i = 0; i < other.bits.size(); ++i) {
      uint64_t o = other.bits[i];
      uint64_t m = i < bits.size() ? bits[i] : 0;
      if ((o & ~m) != 0) return false;
    }
    return true;
  }
};

struct TrackedRay {
  Vec v;
  SatSet sat;
};

// rp and rn are adjacent iff no third ray saturates every processed
// inequality both of them saturate. Exact while the tracked system stays
// minimal, which the incremental construction guarantees.
bool adjacent(const std::vector<TrackedRay>& rays, std::size_t ip, std::size_t in) {
  SatSet common = SatSet::intersect(rays[ip].sat, rays[in].sat);
  for (std::size_t k = 0; k < rays.size(); ++k) {
    if (k == ip || k == in) continue;
    if (rays[k].sat.contains(common)) return false;
  }
  return true;
}

}  // namespace

Gens convert(const std::vector<Vec>& eqs, const std::vector<Vec>& ineqs,
             std::size_t width, std::size_t ray_budget) {
  std::vector<Vec> lines;
  lines.reserve(width);
  for (std::size_t i = 0; i < width; ++i) {
    Vec e(width, 0);
    e[i] = 1;
    lines.push_back(std::move(e));
  }
  std::vector<TrackedRay> rays;
  std::size_t sat_index = 0;  // ordinal of the current inequality row
  // Adjacency tests dominate the cost: pos * neg pairs, each scanning all
  // rays. Degenerate inputs are cut off and handled by the caller.
  std::size_t work = 0;
  const std::size_t work_budget = 50'000'000;

  auto process = [&](const Vec& row, bool is_eq) {
    assert(row.size() == width);
    // A line with nonzero scalar product absorbs the row.
    std::size_t hit = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (dot(row, lines[i]) != 0) {
        hit = i;
        break;
      }
    }
    if (hit != lines.size()) {
      Vec pivot = std::move(lines[hit]);
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(hit));
      mpz_class s = dot(row, pivot);
      if (s < 0) {
        for (auto& c : pivot) c = -c;
        s = -s;
      }
      for (auto& l : lines) {
        mpz_class cl = dot(row, l);
        if (cl == 0) continue;
        for (std::size_t i = 0; i < width; ++i) l[i] = s * l[i] - cl * pivot[i];
        normalize(l);
      }
      for (auto& r : rays) {
        mpz_class cr = dot(row, r.v);
        if (cr != 0) {
          for (std::size_t i = 0; i < width; ++i) r.v[i] = s * r.v[i] - cr * pivot[i];
          normalize(r.v);
        }
        if (!is_eq) r.sat.set(sat_index);  // all rays lie on the row now
      }
      if (!is_eq) {
        TrackedRay nr;
        nr.v = std::move(pivot);
        normalize(nr.v);
        for (std::size_t k = 0; k < sat_index; ++k) nr.sat.set(k);  // was a line
        rays.push_back(std::move(nr));
        ++sat_index;
      }
      return;
    }

    std::vector<std::size_t> pos, zero, neg;
    std::vector<mpz_class> prod(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
      prod[i] = dot(row, rays[i].v);
      int sgn = mpz_sgn(prod[i].get_mpz_t());
      if (sgn > 0)
        pos.push_back(i);
      else if (sgn < 0)
        neg.push_back(i);
      else
        zero.push_back(i);
    }

    if (!is_eq && neg.empty()) {
      // Row already satisfied; only saturation bookkeeping.
      for (std::size_t i : zero) rays[i].sat.set(sat_index);
      ++sat_index;
      return;
    }
    if (is_eq && pos.empty() && neg.empty()) return;  // already saturated

    work += pos.size() * neg.size() * rays.size();
    if (work > work_budget) throw ConversionLimitExceeded{};

    // Combinations of adjacent crossing pairs land on the hyperplane.
    std::vector<TrackedRay> combos;
    for (std::size_t ip : pos) {
      for (std::size_t in : neg) {
        if (!adjacent(rays, ip, in)) continue;
        TrackedRay nr;
        nr.v.resize(width);
        for (std::size_t i = 0; i < width; ++i)
          nr.v[i] = prod[ip] * rays[in].v[i] - prod[in] * rays[ip].v[i];
        normalize(nr.v);
        nr.sat = SatSet::intersect(rays[ip].sat, rays[in].sat);
        if (!is_eq) nr.sat.set(sat_index);
        combos.push_back(std::move(nr));
      }
    }

    std::vector<TrackedRay> next;
    if (!is_eq) {
      for (std::size_t i : pos) next.push_back(std::move(rays[i]));
      for (std::size_t i : zero) {
        rays[i].sat.set(sat_index);
        next.push_back(std::move(rays[i]));
      }
    } else {
      for (std::size_t i : zero) next.push_back(std::move(rays[i]));
    }
    for (auto& c : combos) next.push_back(std::move(c));
    rays = std::move(next);
    if (rays.size() > ray_budget) throw ConversionLimitExceeded{};
    if (!is_eq) ++sat_index;
  };

  for (const auto& row : eqs) process(row, true);
  for (const auto& row : ineqs) process(row, false);

  Gens out;
  out.lines = std::move(lines);
  out.rays.reserve(rays.size());
  for (auto& r : rays) out.rays.push_back(std::move(r.v));
  return out;
}

}  // namespace polybound::dd
