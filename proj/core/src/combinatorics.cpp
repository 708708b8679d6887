// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/combinatorics.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <stdexcept>

namespace bubbletx {

int internal_index(const IndexSet& f, int y)
{
  auto it = std::lower_bound(f.begin(), f.end(), y);
  if (it == f.end() || *it != y)
    throw std::invalid_argument("internal_index: vertex not in simplex");
  return static_cast<int>(it - f.begin());
}

bool contains(const IndexSet& f, int y)
{
  return std::binary_search(f.begin(), f.end(), y);
}

bool is_subsimplex(const IndexSet& e, const IndexSet& f)
{
  return std::includes(f.begin(), f.end(), e.begin(), e.end());
}

IndexSet remove_vertex(const IndexSet& f, int y)
{
  IndexSet out;
  out.reserve(f.size() - 1);
  for (int v : f)
    if (v != y)
      out.push_back(v);
  if (out.size() != f.size() - 1)
    throw std::invalid_argument("remove_vertex: vertex not in simplex");
  return out;
}

IndexSet merge(const IndexSet& a, const IndexSet& b)
{
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet difference(const IndexSet& f, const IndexSet& e)
{
  IndexSet out;
  std::set_difference(f.begin(), f.end(), e.begin(), e.end(), std::back_inserter(out));
  return out;
}

IndexSet intersection(const IndexSet& a, const IndexSet& b)
{
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<IndexSet> subsets_of_size(const IndexSet& f, int count)
{
  std::vector<IndexSet> out;
  const int n = static_cast<int>(f.size());
  if (count < 0 || count > n)
    return out;
  std::vector<int> idx(count);
  for (int i = 0; i < count; ++i)
    idx[i] = i;
  while (true) {
    IndexSet s(count);
    for (int i = 0; i < count; ++i)
      s[i] = f[idx[i]];
    out.push_back(std::move(s));
    int i = count - 1;
    while (i >= 0 && idx[i] == n - count + i)
      --i;
    if (i < 0)
      break;
    ++idx[i];
    for (int p = i + 1; p < count; ++p)
      idx[p] = idx[p - 1] + 1;
  }
  return out;
}

std::vector<IndexSet> all_subsets(const IndexSet& f)
{
  std::vector<IndexSet> out;
  for (int s = 1; s <= static_cast<int>(f.size()); ++s)
    for (auto& e : subsets_of_size(f, s))
      out.push_back(std::move(e));
  return out;
}

long long binomial(int n, int k)
{
  if (k < 0 || k > n)
    return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return r;
}

std::vector<int> mask_to_positions(AltMask mask)
{
  std::vector<int> out;
  for (int p = 0; mask != 0; ++p, mask >>= 1)
    if (mask & 1u)
      out.push_back(p);
  return out;
}

AltMask positions_to_mask(const std::vector<int>& positions)
{
  AltMask m = 0;
  for (int p : positions)
    m |= (AltMask{1} << p);
  return m;
}

int mask_size(AltMask mask)
{
  return std::popcount(mask);
}

std::vector<AltMask> alternator_masks(int nvars, int k)
{
  std::vector<AltMask> out;
  if (k < 0 || k > nvars)
    return out;
  if (k == 0)
    return {0u};
  const AltMask limit = (nvars >= 32) ? ~AltMask{0} : ((AltMask{1} << nvars) - 1);
  for (AltMask m = 0; m <= limit; ++m)
    if (mask_size(m) == k)
      out.push_back(m);
  return out;
}

int shuffle_sign(AltMask a, AltMask b)
{
  if ((a & b) != 0)
    return 0;
  // Count inversions: pairs (i in a, j in b) with j < i.
  int inv = 0;
  for (int i = 0; i < 32; ++i) {
    if (!(a >> i))
      break;
    if ((a >> i) & 1u)
      inv += std::popcount(b & ((AltMask{1} << i) - 1));
  }
  return (inv % 2 == 0) ? 1 : -1;
}

int wedge_sign(AltMask a, AltMask b)
{
  return shuffle_sign(a, b);
}

int insert_front_sign(AltMask mask, int bit_position)
{
  if (mask & (AltMask{1} << bit_position))
    return 0;
  return shuffle_sign(AltMask{1} << bit_position, mask);
}

int complement_sign(AltMask j_mask, int n)
{
  AltMask full = (n >= 32) ? ~AltMask{0} : ((AltMask{1} << n) - 1);
  return shuffle_sign(j_mask, full & ~j_mask);
}

std::vector<Exponents> exponents_of_degree(int nvars, int degree)
{
  std::vector<Exponents> out;
  if (nvars == 0) {
    if (degree == 0)
      out.push_back(Exponents{});
    return out;
  }
  Exponents cur(static_cast<std::size_t>(nvars), 0);
  // Recursive enumeration, lexicographic with leftmost variable dominant.
  std::vector<std::pair<int, int>> stack;  // (var, remaining) frames unrolled below
  std::function<void(int, int)> rec = [&](int var, int remaining) {
    if (var == nvars - 1) {
      cur[var] = static_cast<std::uint8_t>(remaining);
      out.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[var] = static_cast<std::uint8_t>(e);
      rec(var + 1, remaining - e);
    }
  };
  rec(0, degree);
  return out;
}

std::vector<Exponents> exponents_up_to_degree(int nvars, int degree)
{
  std::vector<Exponents> out;
  for (int d = 0; d <= degree; ++d)
    for (auto& e : exponents_of_degree(nvars, d))
      out.push_back(std::move(e));
  return out;
}

int total_degree(const Exponents& e)
{
  int t = 0;
  for (auto v : e)
    t += v;
  return t;
}

}  // namespace bubbletx
