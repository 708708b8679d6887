// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_FORMS_HPP
#define BUBBLETX_FORMS_HPP

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "bubbletx/mesh.hpp"
#include "bubbletx/quadrature.hpp"

namespace bubbletx {

/// Value of a k-form at a point: components over ascending Cartesian index
/// sets of the ambient space, identified by alternator masks.
struct AltTensor {
  int n = 0;
  int k = 0;
  std::vector<double> comp;  // ordered as alternator_masks(n, k)

  AltTensor() = default;
  AltTensor(int n_, int k_);

  static const std::vector<AltMask>& masks(int n, int k);
  int index_of(AltMask m) const;

  double apply(const std::vector<Vec>& vectors) const;
  double dot(const AltTensor& other) const;
  double norm() const;

  AltTensor& operator+=(const AltTensor& other);
  AltTensor& operator-=(const AltTensor& other);
  AltTensor& operator*=(double s);
  friend AltTensor wedge(const AltTensor& a, const AltTensor& b);
};

/// Polynomial differential form in `nvars` scalar variables: a coefficient
/// map  (monomial exponents, alternator mask) -> real.  The same container
/// backs cell-local forms in the tail barycentric coordinates and forms on
/// the coordinate simplices of the lambda space.
struct PolyForm {
  struct Key {
    Exponents exp;
    AltMask alt = 0;
    bool operator<(const Key& other) const
    {
      if (exp != other.exp)
        return exp < other.exp;
      return alt < other.alt;
    }
  };

  int nvars = 0;
  int order = 0;
  std::map<Key, double> terms;

  PolyForm() = default;
  PolyForm(int nvars_, int order_) : nvars(nvars_), order(order_) {}

  static PolyForm constant(int nvars, double value);
  static PolyForm variable(int nvars, int var);
  static PolyForm dvariable(int nvars, int var);
  /// Affine scalar c0 + sum_i c_i x_i.
  static PolyForm affine(int nvars, double c0, const Vec& linear);

  bool is_zero(double tol = 0.0) const;
  int degree(double tol = 0.0) const;
  void add_term(const Exponents& exp, AltMask alt, double coef);
  void prune(double tol);

  PolyForm& operator+=(const PolyForm& other);
  PolyForm& operator-=(const PolyForm& other);
  PolyForm& operator*=(double s);

  friend PolyForm operator*(double s, PolyForm f)
  {
    f *= s;
    return f;
  }

  /// Exterior derivative with respect to the variables.
  PolyForm d() const;

  friend PolyForm wedge(const PolyForm& a, const PolyForm& b);

  /// Contraction with the vector field whose pairing with dx_i is the affine
  /// scalar `pairings[i]`.
  PolyForm contract(const std::vector<PolyForm>& pairings) const;

  /// Substitute each variable by a scalar polynomial and each dx_i by a
  /// 1-form, both over `new_nvars` variables.
  PolyForm substitute(int new_nvars, const std::vector<PolyForm>& var_images,
                      const std::vector<PolyForm>& dvar_images) const;

  /// Value as an AltTensor; `dvar_rows` row i is dx_i as a covector on the
  /// ambient space.
  AltTensor tensor(const Vec& vars, const Mat& dvar_rows) const;

  /// Scalar value of the form applied to fixed vectors; `pairings(i, q)` is
  /// dx_i applied to the q-th vector.
  double apply(const Vec& vars, const Mat& pairings) const;

  /// Coefficient vector of the component on an alternator mask (0-form slice).
  PolyForm component(AltMask alt) const;

  double coef_norm() const;
  friend double coef_distance(const PolyForm& a, const PolyForm& b);
};

/// Canonicalize a form written in all n+1 barycentric coordinates of a cell
/// (positions 0..n) to the tail coordinates 1..n, using lambda_0 = 1 - sum
/// and d lambda_0 = -sum.
PolyForm canonicalize_full(const PolyForm& full);

/// Polynomial k-form on the coordinate simplex spanned by the lambda
/// variables of the listed global vertices.
struct LambdaForm {
  IndexSet vertices;  // ascending global vertex ids; one variable each
  PolyForm poly;

  LambdaForm() = default;
  LambdaForm(IndexSet vertices_, int order);

  int nvars() const { return static_cast<int>(vertices.size()); }

  /// Restriction to the coordinate subsimplex of `sub` (variables of
  /// dropped vertices set to zero).
  LambdaForm trace_to(const IndexSet& sub) const;

  /// Multiplication by b(lambda)^power with b = 1 - sum of the variables.
  LambdaForm times_b_power(int power) const;

  LambdaForm d() const;

  /// Components at a point of the coordinate simplex.
  AltTensor tensor_at(const Vec& lambda) const;
};

LambdaForm operator+(LambdaForm a, const LambdaForm& b);
LambdaForm operator-(LambdaForm a, const LambdaForm& b);
LambdaForm operator*(double s, LambdaForm a);

/// Wedge of two forms on the same coordinate simplex.
LambdaForm wedge_lambda(const LambdaForm& a, const LambdaForm& b);

/// Piecewise form on a mesh: per-cell polynomial coefficients, or a pointwise
/// evaluation callback for non-polynomial inputs.
struct PiecewiseForm {
  using Callback = std::function<AltTensor(int cell, const Vec& x)>;

  const SimplicialComplex* mesh = nullptr;
  int order = 0;
  int degree = -1;  // nominal polynomial degree; -1 for callback forms
  std::vector<PolyForm> cell_forms;
  Callback callback;

  PiecewiseForm() = default;
  PiecewiseForm(const SimplicialComplex& mesh_, int order_, int degree_);

  bool is_polynomial() const { return !cell_forms.empty(); }

  /// Value at a point of the given cell.
  AltTensor value(int cell, const Vec& x) const;
  double apply(int cell, const Vec& x, const std::vector<Vec>& vectors) const;

  PiecewiseForm& operator+=(const PiecewiseForm& other);
  PiecewiseForm& operator-=(const PiecewiseForm& other);
  PiecewiseForm& operator*=(double s);
};

/// Trace of a piecewise form on a subsimplex, written in the barycentric
/// coordinates of that simplex.
struct FaceForm {
  IndexSet face;
  int order = 0;
  PolyForm poly;  // tail barycentric coordinates of the face
};

/// Cache of per-cell Whitney form coefficient polynomials.
class WhitneyCache {
public:
  explicit WhitneyCache(const SimplicialComplex& mesh) : mesh_(&mesh) {}
  const SimplicialComplex& mesh() const { return *mesh_; }

  /// Whitney form of simplex `f` restricted to `cell` (zero if f is not a
  /// subsimplex of the cell).
  const PolyForm& on_cell(int cell, const IndexSet& f) const;

private:
  const SimplicialComplex* mesh_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, IndexSet>, PolyForm> cache_;
};

// -- operations ------------------------------------------------------------

/// d of a piecewise polynomial form; order k = n returns the zero form.
PiecewiseForm exterior_derivative(const PiecewiseForm& u);

PiecewiseForm wedge(const PiecewiseForm& u, const PiecewiseForm& v);

/// Affine vector field x -> A x + b.
struct AffineField {
  Mat A;
  Vec b;
  Vec at(const Vec& x) const { return A * x + b; }
  static AffineField position_minus(const Vec& a);
};

PiecewiseForm contract(const PiecewiseForm& u, const AffineField& v);

/// Trace on a subsimplex; requires single-valued traces from all incident
/// cells (tolerance `tol`), which is the membership criterion for the
/// piecewise smooth space.
FaceForm trace_to(const PiecewiseForm& u, const IndexSet& f, double tol = 1e-10);

/// Whitney form of `f` as a global piecewise polynomial.
PiecewiseForm whitney(const SimplicialComplex& mesh, const IndexSet& f);

/// rho_f = 1 - sum of the barycentric functions of f's vertices.
PiecewiseForm rho(const SimplicialComplex& mesh, const IndexSet& f);

/// Pullback of a lambda-space form along L_g, g a subset of w's vertices
/// (or empty). Polynomial, computed cell by cell by exact substitution.
PiecewiseForm lambda_pullback(const SimplicialComplex& mesh, const IndexSet& g,
                              const LambdaForm& w);

struct MembershipResult {
  bool pass = false;
  double residual = 0.0;
};

/// Degree-r membership test: interpolation at the principal lattice nodes
/// reproduces the form at independent interior check points.
MembershipResult membership_Pr(const PiecewiseForm& u, int r, double tol = 1e-9,
                               unsigned seed = 9001);

/// Trimmed-space membership: the P_r test plus the P_r test of the
/// contraction with x - a for n+1 affinely independent anchors a.
MembershipResult membership_Pr_minus(const PiecewiseForm& u, int r, double tol = 1e-9,
                                     unsigned seed = 9001);

double l2_inner(const PiecewiseForm& u, const PiecewiseForm& v, int quad_degree = -1);
double l2_norm(const PiecewiseForm& u, int quad_degree = -1);

enum class FormClass { Pr, PrMinus, WhitneySpan };

/// Reproducible pseudo-random conforming form. Pr draws combine global
/// barycentric monomials with global d-lambda alternators; PrMinus and
/// WhitneySpan draws combine Whitney forms with global polynomial factors,
/// so single-valued traces hold by construction.
PiecewiseForm random_form(const SimplicialComplex& mesh, int k, int r, FormClass cls,
                          unsigned seed);

/// Deterministic pseudo-random points with all barycentric coordinates
/// >= min_bary, as (cell, point) pairs, `count` per cell.
std::vector<std::pair<int, Vec>> interior_points(const SimplicialComplex& mesh, int count,
                                                 unsigned seed, double min_bary = 0.05);

/// Largest absolute component of `u` over the given sample points.
double sup_norm(const PiecewiseForm& u, const std::vector<std::pair<int, Vec>>& points);

}  // namespace bubbletx

#endif
