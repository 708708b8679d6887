// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_COMBINATORICS_HPP
#define BUBBLETX_COMBINATORICS_HPP

#include <cstdint>
#include <vector>

namespace bubbletx {

/// Ascending list of global vertex ids; the empty list is the empty simplex.
using IndexSet = std::vector<int>;

/// Exponent vector of a monomial, one entry per variable.
using Exponents = std::vector<std::uint8_t>;

/// Bitmask over local variable positions, encoding an ascending alternator set.
using AltMask = std::uint32_t;

/// Position of vertex id `y` inside the ascending simplex `f` (0-based).
/// Throws if `y` is not a vertex of `f`.
int internal_index(const IndexSet& f, int y);

bool contains(const IndexSet& f, int y);

/// True if every vertex of `e` is a vertex of `f`.
bool is_subsimplex(const IndexSet& e, const IndexSet& f);

/// `f` with the vertex `y` removed.
IndexSet remove_vertex(const IndexSet& f, int y);

/// Ascending union of two disjoint or overlapping vertex sets.
IndexSet merge(const IndexSet& a, const IndexSet& b);

/// Set difference f \ e, ascending.
IndexSet difference(const IndexSet& f, const IndexSet& e);

IndexSet intersection(const IndexSet& a, const IndexSet& b);

/// All subsets of `f` with exactly `count` vertices, in lexicographic order.
std::vector<IndexSet> subsets_of_size(const IndexSet& f, int count);

/// All nonempty subsets of `f`, ordered by size then lexicographically.
std::vector<IndexSet> all_subsets(const IndexSet& f);

long long binomial(int n, int k);

/// Ascending local positions encoded in `mask`.
std::vector<int> mask_to_positions(AltMask mask);
AltMask positions_to_mask(const std::vector<int>& positions);
int mask_size(AltMask mask);

/// All masks over `nvars` positions with `k` bits, ascending as integers.
std::vector<AltMask> alternator_masks(int nvars, int k);

/// Sign of concatenating the ascending sets `a` then `b` (disjoint) and
/// re-sorting ascending; 0 if they intersect.
int wedge_sign(AltMask a, AltMask b);

/// Sign (-1)^pos and reduced mask for inserting single-bit `bit` into `mask`.
/// Used for d (insert in front) and interior products.
int insert_front_sign(AltMask mask, int bit_position);

/// Sign of the permutation sending (positions of a, positions of b) to the
/// ascending order of their union; requires disjoint masks.
int shuffle_sign(AltMask a, AltMask b);

/// Sign of the permutation (J, complement of J) of (0..n-1), where J is given
/// as a mask over n positions.
int complement_sign(AltMask j_mask, int n);

/// Multi-indices alpha with |alpha| == degree over `nvars` variables,
/// lexicographic.
std::vector<Exponents> exponents_of_degree(int nvars, int degree);

/// Multi-indices with |alpha| <= degree, ordered by total degree then lex.
std::vector<Exponents> exponents_up_to_degree(int nvars, int degree);

int total_degree(const Exponents& e);

}  // namespace bubbletx

#endif
