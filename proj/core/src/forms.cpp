// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bubbletx {

namespace {

double small_det(const Mat& m)
{
  switch (m.rows()) {
    case 0:
      return 1.0;
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default:
      return m.determinant();
  }
}

double monomial_value(const Exponents& exp, const Vec& vars)
{
  double v = 1.0;
  for (std::size_t i = 0; i < exp.size(); ++i)
    for (int p = 0; p < exp[i]; ++p)
      v *= vars(static_cast<int>(i));
  return v;
}

}  // namespace

// -- AltTensor ---------------------------------------------------------------

AltTensor::AltTensor(int n_, int k_) : n(n_), k(k_)
{
  comp.assign(masks(n, k).size(), 0.0);
}

const std::vector<AltMask>& AltTensor::masks(int n, int k)
{
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<AltMask>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, alternator_masks(n, k)).first;
  return it->second;
}

int AltTensor::index_of(AltMask m) const
{
  const auto& ms = masks(n, k);
  auto it = std::lower_bound(ms.begin(), ms.end(), m);
  if (it == ms.end() || *it != m)
    throw std::invalid_argument("AltTensor: mask not of this order");
  return static_cast<int>(it - ms.begin());
}

double AltTensor::apply(const std::vector<Vec>& vectors) const
{
  if (static_cast<int>(vectors.size()) != k)
    throw std::invalid_argument("AltTensor::apply: wrong number of vectors");
  const auto& ms = masks(n, k);
  double out = 0.0;
  Mat sel(k, k);
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    if (comp[mi] == 0.0)
      continue;
    const auto pos = mask_to_positions(ms[mi]);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        sel(a, b) = vectors[b](pos[a]);
    out += comp[mi] * small_det(sel);
  }
  return out;
}

double AltTensor::dot(const AltTensor& other) const
{
  double s = 0.0;
  for (std::size_t i = 0; i < comp.size(); ++i)
    s += comp[i] * other.comp[i];
  return s;
}

double AltTensor::norm() const
{
  return std::sqrt(dot(*this));
}

AltTensor& AltTensor::operator+=(const AltTensor& other)
{
  for (std::size_t i = 0; i < comp.size(); ++i)
    comp[i] += other.comp[i];
  return *this;
}

AltTensor& AltTensor::operator-=(const AltTensor& other)
{
  for (std::size_t i = 0; i < comp.size(); ++i)
    comp[i] -= other.comp[i];
  return *this;
}

AltTensor& AltTensor::operator*=(double s)
{
  for (auto& c : comp)
    c *= s;
  return *this;
}

AltTensor wedge(const AltTensor& a, const AltTensor& b)
{
  AltTensor out(a.n, a.k + b.k);
  const auto& ma = AltTensor::masks(a.n, a.k);
  const auto& mb = AltTensor::masks(b.n, b.k);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (a.comp[i] == 0.0)
      continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      if (b.comp[j] == 0.0)
        continue;
      const int sign = shuffle_sign(ma[i], mb[j]);
      if (sign == 0)
        continue;
      out.comp[out.index_of(ma[i] | mb[j])] += sign * a.comp[i] * b.comp[j];
    }
  }
  return out;
}

// -- PolyForm ----------------------------------------------------------------

PolyForm PolyForm::constant(int nvars, double value)
{
  PolyForm f(nvars, 0);
  if (value != 0.0)
    f.terms[{Exponents(nvars, 0), 0}] = value;
  return f;
}

PolyForm PolyForm::variable(int nvars, int var)
{
  PolyForm f(nvars, 0);
  Exponents e(nvars, 0);
  e[var] = 1;
  f.terms[{e, 0}] = 1.0;
  return f;
}

PolyForm PolyForm::dvariable(int nvars, int var)
{
  PolyForm f(nvars, 1);
  f.terms[{Exponents(nvars, 0), AltMask{1} << var}] = 1.0;
  return f;
}

PolyForm PolyForm::affine(int nvars, double c0, const Vec& linear)
{
  PolyForm f = constant(nvars, c0);
  for (int v = 0; v < nvars; ++v)
    if (linear(v) != 0.0) {
      Exponents e(nvars, 0);
      e[v] = 1;
      f.terms[{e, 0}] += linear(v);
    }
  return f;
}

bool PolyForm::is_zero(double tol) const
{
  for (const auto& [key, coef] : terms)
    if (std::abs(coef) > tol)
      return false;
  return true;
}

int PolyForm::degree(double tol) const
{
  int deg = 0;
  for (const auto& [key, coef] : terms)
    if (std::abs(coef) > tol)
      deg = std::max(deg, total_degree(key.exp));
  return deg;
}

void PolyForm::add_term(const Exponents& exp, AltMask alt, double coef)
{
  if (coef == 0.0)
    return;
  auto [it, inserted] = terms.emplace(Key{exp, alt}, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0.0)
      terms.erase(it);
  }
}

void PolyForm::prune(double tol)
{
  for (auto it = terms.begin(); it != terms.end();)
    it = std::abs(it->second) <= tol ? terms.erase(it) : std::next(it);
}

PolyForm& PolyForm::operator+=(const PolyForm& other)
{
  for (const auto& [key, coef] : other.terms)
    add_term(key.exp, key.alt, coef);
  return *this;
}

PolyForm& PolyForm::operator-=(const PolyForm& other)
{
  for (const auto& [key, coef] : other.terms)
    add_term(key.exp, key.alt, -coef);
  return *this;
}

PolyForm& PolyForm::operator*=(double s)
{
  if (s == 0.0) {
    terms.clear();
    return *this;
  }
  for (auto& [key, coef] : terms)
    coef *= s;
  return *this;
}

PolyForm PolyForm::d() const
{
  PolyForm out(nvars, order + 1);
  for (const auto& [key, coef] : terms) {
    for (int v = 0; v < nvars; ++v) {
      if (key.exp[v] == 0)
        continue;
      const int sign = insert_front_sign(key.alt, v);
      if (sign == 0)
        continue;
      Exponents e = key.exp;
      e[v] -= 1;
      out.add_term(e, key.alt | (AltMask{1} << v), sign * key.exp[v] * coef);
    }
  }
  return out;
}

PolyForm wedge(const PolyForm& a, const PolyForm& b)
{
  if (a.nvars != b.nvars)
    throw std::invalid_argument("wedge: variable count mismatch");
  PolyForm out(a.nvars, a.order + b.order);
  for (const auto& [ka, ca] : a.terms)
    for (const auto& [kb, cb] : b.terms) {
      const int sign = shuffle_sign(ka.alt, kb.alt);
      if (sign == 0)
        continue;
      Exponents e = ka.exp;
      for (int v = 0; v < a.nvars; ++v)
        e[v] = static_cast<std::uint8_t>(e[v] + kb.exp[v]);
      out.add_term(e, ka.alt | kb.alt, sign * ca * cb);
    }
  return out;
}

PolyForm PolyForm::contract(const std::vector<PolyForm>& pairings) const
{
  if (order == 0)
    throw std::invalid_argument("contract: cannot contract a 0-form");
  PolyForm out(nvars, order - 1);
  for (const auto& [key, coef] : terms) {
    const auto pos = mask_to_positions(key.alt);
    for (std::size_t q = 0; q < pos.size(); ++q) {
      const double sign = (q % 2 == 0) ? 1.0 : -1.0;
      PolyForm piece = pairings[pos[q]];
      piece *= sign * coef;
      const AltMask rest = key.alt & ~(AltMask{1} << pos[q]);
      for (const auto& [pk, pc] : piece.terms) {
        Exponents e = key.exp;
        for (int v = 0; v < nvars; ++v)
          e[v] = static_cast<std::uint8_t>(e[v] + pk.exp[v]);
        out.add_term(e, rest, pc);
      }
    }
  }
  return out;
}

PolyForm PolyForm::substitute(int new_nvars, const std::vector<PolyForm>& var_images,
                              const std::vector<PolyForm>& dvar_images) const
{
  PolyForm out(new_nvars, order);
  for (const auto& [key, coef] : terms) {
    PolyForm factor = PolyForm::constant(new_nvars, coef);
    for (int v = 0; v < nvars && !factor.terms.empty(); ++v)
      for (int p = 0; p < key.exp[v]; ++p)
        factor = wedge(factor, var_images[v]);
    if (factor.terms.empty())
      continue;
    for (int v : mask_to_positions(key.alt)) {
      factor = wedge(factor, dvar_images[v]);
      if (factor.terms.empty())
        break;
    }
    out += factor;
  }
  out.order = order;
  return out;
}

AltTensor PolyForm::tensor(const Vec& vars, const Mat& dvar_rows) const
{
  const int ambient = static_cast<int>(dvar_rows.cols());
  AltTensor out(ambient, order);
  const auto& ms = AltTensor::masks(ambient, order);
  Mat sel(order, order);
  for (const auto& [key, coef] : terms) {
    const double mono = coef * monomial_value(key.exp, vars);
    if (mono == 0.0)
      continue;
    const auto rows = mask_to_positions(key.alt);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      const auto cols = mask_to_positions(ms[mi]);
      for (int a = 0; a < order; ++a)
        for (int b = 0; b < order; ++b)
          sel(a, b) = dvar_rows(rows[a], cols[b]);
      out.comp[mi] += mono * small_det(sel);
    }
  }
  return out;
}

double PolyForm::apply(const Vec& vars, const Mat& pairings) const
{
  double out = 0.0;
  Mat sel(order, order);
  for (const auto& [key, coef] : terms) {
    const double mono = coef * monomial_value(key.exp, vars);
    if (mono == 0.0)
      continue;
    const auto rows = mask_to_positions(key.alt);
    for (int a = 0; a < order; ++a)
      for (int b = 0; b < order; ++b)
        sel(a, b) = pairings(rows[a], b);
    out += mono * small_det(sel);
  }
  return out;
}

PolyForm PolyForm::component(AltMask alt) const
{
  PolyForm out(nvars, 0);
  for (const auto& [key, coef] : terms)
    if (key.alt == alt)
      out.add_term(key.exp, 0, coef);
  return out;
}

double PolyForm::coef_norm() const
{
  double s = 0.0;
  for (const auto& [key, coef] : terms)
    s = std::max(s, std::abs(coef));
  return s;
}

double coef_distance(const PolyForm& a, const PolyForm& b)
{
  PolyForm diff = a;
  diff -= b;
  return diff.coef_norm();
}

PolyForm canonicalize_full(const PolyForm& full)
{
  const int n = full.nvars - 1;
  std::vector<PolyForm> vars, dvars;
  Vec minus_ones = Vec::Constant(n, -1.0);
  vars.push_back(PolyForm::affine(n, 1.0, minus_ones));
  PolyForm dzero(n, 1);
  for (int v = 0; v < n; ++v)
    dzero -= PolyForm::dvariable(n, v);
  dvars.push_back(dzero);
  for (int v = 0; v < n; ++v) {
    vars.push_back(PolyForm::variable(n, v));
    dvars.push_back(PolyForm::dvariable(n, v));
  }
  return full.substitute(n, vars, dvars);
}

// -- LambdaForm ----------------------------------------------------------------

LambdaForm::LambdaForm(IndexSet vertices_, int order)
    : vertices(std::move(vertices_)), poly(static_cast<int>(vertices.size()), order)
{
}

LambdaForm LambdaForm::trace_to(const IndexSet& sub) const
{
  if (!sub.empty() && !is_subsimplex(sub, vertices))
    throw std::invalid_argument("LambdaForm::trace_to: not a subset");
  LambdaForm out(sub, poly.order);
  const int m = static_cast<int>(sub.size());
  std::vector<PolyForm> vars, dvars;
  for (int v = 0; v < nvars(); ++v) {
    if (contains(sub, vertices[v])) {
      const int target = internal_index(sub, vertices[v]);
      vars.push_back(PolyForm::variable(m, target));
      dvars.push_back(PolyForm::dvariable(m, target));
    } else {
      vars.push_back(PolyForm(m, 0));
      dvars.push_back(PolyForm(m, 1));
    }
  }
  out.poly = poly.substitute(m, vars, dvars);
  return out;
}

LambdaForm LambdaForm::times_b_power(int power) const
{
  PolyForm b = PolyForm::affine(nvars(), 1.0, Vec::Constant(nvars(), -1.0));
  LambdaForm out = *this;
  for (int p = 0; p < power; ++p)
    out.poly = wedge(b, out.poly);
  out.poly.order = poly.order;
  return out;
}

LambdaForm LambdaForm::d() const
{
  LambdaForm out = *this;
  out.poly = poly.d();
  return out;
}

AltTensor LambdaForm::tensor_at(const Vec& lambda) const
{
  return poly.tensor(lambda, Mat::Identity(nvars(), nvars()));
}

LambdaForm operator+(LambdaForm a, const LambdaForm& b)
{
  a.poly += b.poly;
  return a;
}

LambdaForm operator-(LambdaForm a, const LambdaForm& b)
{
  a.poly -= b.poly;
  return a;
}

LambdaForm operator*(double s, LambdaForm a)
{
  a.poly *= s;
  return a;
}

LambdaForm wedge_lambda(const LambdaForm& a, const LambdaForm& b)
{
  if (a.vertices != b.vertices)
    throw std::invalid_argument("wedge_lambda: forms on different coordinate simplices");
  LambdaForm out(a.vertices, a.poly.order + b.poly.order);
  out.poly = wedge(a.poly, b.poly);
  return out;
}

// -- PiecewiseForm -------------------------------------------------------------

PiecewiseForm::PiecewiseForm(const SimplicialComplex& mesh_, int order_, int degree_)
    : mesh(&mesh_), order(order_), degree(degree_)
{
  cell_forms.assign(mesh_.num_cells(), PolyForm(mesh_.dim(), order_));
}

AltTensor PiecewiseForm::value(int cell, const Vec& x) const
{
  if (is_polynomial()) {
    const auto& frame = mesh->frame(cell);
    const Vec lambda = frame.barycentric(x);
    return cell_forms[cell].tensor(lambda.tail(mesh->dim()),
                                   frame.gradients.bottomRows(mesh->dim()));
  }
  if (!callback)
    throw std::logic_error("PiecewiseForm: neither coefficients nor callback set");
  return callback(cell, x);
}

double PiecewiseForm::apply(int cell, const Vec& x, const std::vector<Vec>& vectors) const
{
  return value(cell, x).apply(vectors);
}

namespace {

PiecewiseForm::Callback combine(const PiecewiseForm& a, const PiecewiseForm& b, double sb)
{
  PiecewiseForm ac = a, bc = b;
  return [ac, bc, sb](int cell, const Vec& x) {
    AltTensor t = ac.value(cell, x);
    AltTensor u = bc.value(cell, x);
    u *= sb;
    t += u;
    return t;
  };
}

}  // namespace

PiecewiseForm& PiecewiseForm::operator+=(const PiecewiseForm& other)
{
  if (is_polynomial() && other.is_polynomial()) {
    for (std::size_t c = 0; c < cell_forms.size(); ++c)
      cell_forms[c] += other.cell_forms[c];
    degree = std::max(degree, other.degree);
    return *this;
  }
  callback = combine(*this, other, 1.0);
  cell_forms.clear();
  degree = -1;
  return *this;
}

PiecewiseForm& PiecewiseForm::operator-=(const PiecewiseForm& other)
{
  if (is_polynomial() && other.is_polynomial()) {
    for (std::size_t c = 0; c < cell_forms.size(); ++c)
      cell_forms[c] -= other.cell_forms[c];
    degree = std::max(degree, other.degree);
    return *this;
  }
  callback = combine(*this, other, -1.0);
  cell_forms.clear();
  degree = -1;
  return *this;
}

PiecewiseForm& PiecewiseForm::operator*=(double s)
{
  if (is_polynomial()) {
    for (auto& f : cell_forms)
      f *= s;
    return *this;
  }
  auto cb = callback;
  callback = [cb, s](int cell, const Vec& x) {
    AltTensor t = cb(cell, x);
    t *= s;
    return t;
  };
  return *this;
}

// -- Whitney cache -------------------------------------------------------------

const PolyForm& WhitneyCache::on_cell(int cell, const IndexSet& f) const
{
  std::lock_guard<std::mutex> lock(mutex_);
  auto key = std::make_pair(cell, f);
  auto it = cache_.find(key);
  if (it != cache_.end())
    return it->second;

  const int n = mesh_->dim();
  const int m = static_cast<int>(f.size()) - 1;
  PolyForm result(n, m);
  if (mesh_->cell_has(cell, f)) {
    PolyForm full(n + 1, m);
    std::vector<int> pos(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      pos[i] = mesh_->local_position(cell, f[i]);
    for (std::size_t i = 0; i < f.size(); ++i) {
      PolyForm term = PolyForm::variable(n + 1, pos[i]);
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (j == i)
          continue;
        term = wedge(term, PolyForm::dvariable(n + 1, pos[j]));
      }
      term *= (i % 2 == 0) ? 1.0 : -1.0;
      full += term;
    }
    full.order = m;
    result = canonicalize_full(full);
    result.order = m;
  }
  return cache_.emplace(std::move(key), std::move(result)).first->second;
}

// -- operations ------------------------------------------------------------

PiecewiseForm exterior_derivative(const PiecewiseForm& u)
{
  if (!u.is_polynomial())
    throw std::invalid_argument("exterior_derivative: needs per-cell coefficients");
  PiecewiseForm out(*u.mesh, u.order + 1, std::max(0, u.degree - 1));
  for (std::size_t c = 0; c < u.cell_forms.size(); ++c)
    out.cell_forms[c] = u.cell_forms[c].d();
  return out;
}

PiecewiseForm wedge(const PiecewiseForm& u, const PiecewiseForm& v)
{
  if (u.mesh != v.mesh)
    throw std::invalid_argument("wedge: forms on different meshes");
  if (u.is_polynomial() && v.is_polynomial()) {
    PiecewiseForm out(*u.mesh, u.order + v.order,
                      std::max(0, u.degree) + std::max(0, v.degree));
    for (std::size_t c = 0; c < u.cell_forms.size(); ++c)
      out.cell_forms[c] = wedge(u.cell_forms[c], v.cell_forms[c]);
    return out;
  }
  PiecewiseForm out;
  out.mesh = u.mesh;
  out.order = u.order + v.order;
  out.degree = -1;
  PiecewiseForm uc = u, vc = v;
  out.callback = [uc, vc](int cell, const Vec& x) {
    return wedge(uc.value(cell, x), vc.value(cell, x));
  };
  return out;
}

AffineField AffineField::position_minus(const Vec& a)
{
  AffineField f;
  f.A = Mat::Identity(a.size(), a.size());
  f.b = -a;
  return f;
}

PiecewiseForm contract(const PiecewiseForm& u, const AffineField& v)
{
  if (u.order == 0)
    throw std::invalid_argument("contract: cannot contract a 0-form");
  const auto& mesh = *u.mesh;
  const int n = mesh.dim();
  if (u.is_polynomial()) {
    PiecewiseForm out(mesh, u.order - 1, std::max(0, u.degree) + 1);
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto& frame = mesh.frame(c);
      std::vector<PolyForm> pairings;
      for (int i = 1; i <= n; ++i) {
        // dlambda_i applied to v(x), affine in the barycentric tail.
        Vec values(n + 1);
        for (int p = 0; p <= n; ++p)
          values(p) = frame.gradients.row(i).dot(v.at(frame.vertices.col(p)));
        Vec linear(n);
        for (int p = 1; p <= n; ++p)
          linear(p - 1) = values(p) - values(0);
        pairings.push_back(PolyForm::affine(n, values(0), linear));
      }
      out.cell_forms[c] = u.cell_forms[c].contract(pairings);
    }
    return out;
  }
  PiecewiseForm out;
  out.mesh = u.mesh;
  out.order = u.order - 1;
  out.degree = -1;
  PiecewiseForm uc = u;
  out.callback = [uc, v](int cell, const Vec& x) {
    const AltTensor t = uc.value(cell, x);
    const Vec w = v.at(x);
    AltTensor r(t.n, t.k - 1);
    const auto& ms = AltTensor::masks(t.n, t.k);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      if (t.comp[mi] == 0.0)
        continue;
      const auto pos = mask_to_positions(ms[mi]);
      for (std::size_t q = 0; q < pos.size(); ++q) {
        const double sign = (q % 2 == 0) ? 1.0 : -1.0;
        r.comp[r.index_of(ms[mi] & ~(AltMask{1} << pos[q]))] +=
            sign * t.comp[mi] * w(pos[q]);
      }
    }
    return r;
  };
  return out;
}

namespace {

/// Substitution images mapping the canonical variables of a cell to the
/// canonical variables of a face (with vertex set `f`).
void face_images(const SimplicialComplex& mesh, int cell, const IndexSet& f,
                 std::vector<PolyForm>& vars, std::vector<PolyForm>& dvars)
{
  const int n = mesh.dim();
  const int m = static_cast<int>(f.size()) - 1;
  vars.clear();
  dvars.clear();
  for (int i = 1; i <= n; ++i) {
    const int vid = mesh.cell(cell)[i];
    if (!contains(f, vid)) {
      vars.push_back(PolyForm(m, 0));
      dvars.push_back(PolyForm(m, 1));
      continue;
    }
    const int q = internal_index(f, vid);
    if (q == 0) {
      vars.push_back(PolyForm::affine(m, 1.0, Vec::Constant(m, -1.0)));
      PolyForm dzero(m, 1);
      for (int v = 0; v < m; ++v)
        dzero -= PolyForm::dvariable(m, v);
      dvars.push_back(dzero);
    } else {
      vars.push_back(PolyForm::variable(m, q - 1));
      dvars.push_back(PolyForm::dvariable(m, q - 1));
    }
  }
}

}  // namespace

FaceForm trace_to(const PiecewiseForm& u, const IndexSet& f, double tol)
{
  if (!u.is_polynomial())
    throw std::invalid_argument("trace_to: needs per-cell coefficients");
  const auto& mesh = *u.mesh;
  const int m = static_cast<int>(f.size()) - 1;
  FaceForm out;
  out.face = f;
  out.order = u.order;
  out.poly = PolyForm(m, u.order);
  if (m < u.order)
    return out;  // trace of a k-form on a lower-dimensional simplex vanishes

  bool first = true;
  double scale = 1.0;
  for (int cell : mesh.cells_containing(f)) {
    std::vector<PolyForm> vars, dvars;
    face_images(mesh, cell, f, vars, dvars);
    PolyForm restricted = u.cell_forms[cell].substitute(m, vars, dvars);
    restricted.order = u.order;
    if (first) {
      out.poly = restricted;
      scale = std::max(1.0, restricted.coef_norm());
      first = false;
    } else if (coef_distance(out.poly, restricted) > tol * scale) {
      throw std::runtime_error("trace_to: trace is not single-valued on the face");
    }
  }
  return out;
}

PiecewiseForm whitney(const SimplicialComplex& mesh, const IndexSet& f)
{
  WhitneyCache cache(mesh);
  const int m = static_cast<int>(f.size()) - 1;
  PiecewiseForm out(mesh, m, 1);
  for (int c : mesh.cells_containing(f))
    out.cell_forms[c] = cache.on_cell(c, f);
  return out;
}

PiecewiseForm rho(const SimplicialComplex& mesh, const IndexSet& f)
{
  const int n = mesh.dim();
  PiecewiseForm out(mesh, 0, 1);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    PolyForm p = PolyForm::constant(n, 1.0);
    for (int vid : f) {
      const int pos = mesh.local_position(c, vid);
      if (pos < 0)
        continue;
      if (pos == 0)
        p -= PolyForm::affine(n, 1.0, Vec::Constant(n, -1.0));
      else
        p -= PolyForm::variable(n, pos - 1);
    }
    out.cell_forms[c] = p;
  }
  return out;
}

PiecewiseForm lambda_pullback(const SimplicialComplex& mesh, const IndexSet& g,
                              const LambdaForm& w)
{
  if (!g.empty() && !is_subsimplex(g, w.vertices))
    throw std::invalid_argument("lambda_pullback: g must be a subset of the form's vertices");
  const int n = mesh.dim();
  PiecewiseForm out(mesh, w.poly.order, w.poly.degree());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    std::vector<PolyForm> vars, dvars;
    bool any = false;
    for (int vi = 0; vi < w.nvars(); ++vi) {
      const int vid = w.vertices[vi];
      const int pos = contains(g, vid) ? mesh.local_position(c, vid) : -1;
      if (pos < 0) {
        vars.push_back(PolyForm(n, 0));
        dvars.push_back(PolyForm(n, 1));
      } else if (pos == 0) {
        vars.push_back(PolyForm::affine(n, 1.0, Vec::Constant(n, -1.0)));
        PolyForm dzero(n, 1);
        for (int v = 0; v < n; ++v)
          dzero -= PolyForm::dvariable(n, v);
        dvars.push_back(dzero);
        any = true;
      } else {
        vars.push_back(PolyForm::variable(n, pos - 1));
        dvars.push_back(PolyForm::dvariable(n, pos - 1));
        any = true;
      }
    }
    if (!any && w.poly.order > 0)
      continue;  // constant map pulls higher forms back to zero
    out.cell_forms[c] = w.poly.substitute(n, vars, dvars);
    out.cell_forms[c].order = w.poly.order;
  }
  return out;
}

namespace {

struct Interpolator {
  Mat nodes;  // barycentric rows
  Eigen::PartialPivLU<Mat> lu;
  std::vector<Exponents> monos;

  Interpolator(int dim, int degree)
  {
    nodes = principal_lattice(dim, degree);
    monos = exponents_up_to_degree(dim, degree);
    Mat v(nodes.rows(), monos.size());
    for (int i = 0; i < nodes.rows(); ++i) {
      Vec tail = nodes.row(i).tail(dim).transpose();
      for (std::size_t j = 0; j < monos.size(); ++j)
        v(i, static_cast<int>(j)) = monomial_value(monos[j], tail);
    }
    if (v.rows() != v.cols())
      throw std::logic_error("Interpolator: lattice is not unisolvent-sized");
    lu.compute(v);
  }
};

Vec random_interior_barycentric(int dim, std::mt19937_64& rng, double min_bary)
{
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  Vec best(dim + 1);
  double best_min = -1.0;
  for (int attempt = 0; attempt < 200; ++attempt) {
    Vec lambda(dim + 1);
    double sum = 0.0;
    for (int i = 0; i <= dim; ++i) {
      lambda(i) = -std::log(std::max(uniform(), 1e-300));
      sum += lambda(i);
    }
    lambda /= sum;
    if (lambda.minCoeff() > best_min) {
      best = lambda;
      best_min = lambda.minCoeff();
    }
    if (best_min >= min_bary)
      return best;
  }
  // Pull towards the barycenter far enough to clear the margin.
  const double c = 1.0 / (dim + 1);
  const double t = (min_bary - best_min) / (c - best_min);
  return (1.0 - t) * best + t * Vec::Constant(dim + 1, c);
}

}  // namespace

std::vector<std::pair<int, Vec>> interior_points(const SimplicialComplex& mesh, int count,
                                                 unsigned seed, double min_bary)
{
  std::mt19937_64 rng(seed);
  std::vector<std::pair<int, Vec>> out;
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i < count; ++i) {
      Vec lambda = random_interior_barycentric(mesh.dim(), rng, min_bary);
      out.emplace_back(c, mesh.frame(c).point(lambda));
    }
  return out;
}

double sup_norm(const PiecewiseForm& u, const std::vector<std::pair<int, Vec>>& points)
{
  double s = 0.0;
  for (const auto& [cell, x] : points)
    s = std::max(s, u.value(cell, x).norm());
  return s;
}

MembershipResult membership_Pr(const PiecewiseForm& u, int r, double tol, unsigned seed)
{
  const auto& mesh = *u.mesh;
  const int n = mesh.dim();
  Interpolator interp(n, r);
  const auto& masks = AltTensor::masks(n, u.order);
  std::mt19937_64 rng(seed);

  MembershipResult res;
  double scale = 1.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& frame = mesh.frame(c);
    Mat values(interp.nodes.rows(), masks.size());
    for (int i = 0; i < interp.nodes.rows(); ++i) {
      const AltTensor t = u.value(c, frame.point(interp.nodes.row(i).transpose()));
      for (std::size_t m = 0; m < masks.size(); ++m)
        values(i, static_cast<int>(m)) = t.comp[m];
      scale = std::max(scale, t.norm());
    }
    Mat coefs = interp.lu.solve(values);
    const int checks = static_cast<int>(interp.nodes.rows()) + 3;
    for (int i = 0; i < checks; ++i) {
      const Vec lambda = random_interior_barycentric(n, rng, 0.02);
      const AltTensor t = u.value(c, frame.point(lambda));
      for (std::size_t m = 0; m < masks.size(); ++m) {
        double fit = 0.0;
        for (std::size_t j = 0; j < interp.monos.size(); ++j)
          fit += coefs(static_cast<int>(j), static_cast<int>(m)) *
                 monomial_value(interp.monos[j], lambda.tail(n));
        res.residual = std::max(res.residual, std::abs(fit - t.comp[m]));
      }
    }
  }
  res.residual /= scale;
  res.pass = res.residual <= tol;
  return res;
}

MembershipResult membership_Pr_minus(const PiecewiseForm& u, int r, double tol, unsigned seed)
{
  MembershipResult res = membership_Pr(u, r, tol, seed);
  if (u.order == 0)
    return res;
  const int n = u.mesh->dim();
  for (int q = 0; q <= n && res.pass; ++q) {
    Vec a = Vec::Zero(n);
    if (q > 0)
      a(q - 1) = 1.0;
    const MembershipResult sub =
        membership_Pr(contract(u, AffineField::position_minus(a)), r, tol, seed + 7 * q);
    res.residual = std::max(res.residual, sub.residual);
    res.pass = res.pass && sub.pass;
  }
  return res;
}

double l2_inner(const PiecewiseForm& u, const PiecewiseForm& v, int quad_degree)
{
  const auto& mesh = *u.mesh;
  if (quad_degree < 0) {
    if (u.is_polynomial() && v.is_polynomial())
      quad_degree = std::max(0, u.degree) + std::max(0, v.degree);
    else
      quad_degree = 12;
  }
  const QuadRule& rule = simplex_rule(mesh.dim(), quad_degree);
  double s = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& frame = mesh.frame(c);
    double cell_sum = 0.0;
    for (int q = 0; q < rule.weights.size(); ++q) {
      const Vec x = frame.point(rule.barycentric.row(q).transpose());
      cell_sum += rule.weights(q) * u.value(c, x).dot(v.value(c, x));
    }
    s += frame.volume * cell_sum;
  }
  return s;
}

double l2_norm(const PiecewiseForm& u, int quad_degree)
{
  return std::sqrt(std::max(0.0, l2_inner(u, u, quad_degree)));
}

PiecewiseForm random_form(const SimplicialComplex& mesh, int k, int r, FormClass cls,
                          unsigned seed)
{
  if (k < 0 || k > mesh.dim() || r < 1)
    throw std::invalid_argument("random_form: unsupported order or degree");
  const int n = mesh.dim();

  for (unsigned attempt = 0; attempt < 8; ++attempt) {
    std::mt19937_64 rng(seed + 1000003u * attempt);
    auto uniform = [&rng]() {
      return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    };
    auto random_cell = [&]() { return static_cast<int>(rng() % mesh.num_cells()); };

    PiecewiseForm out(mesh, k, r);
    WhitneyCache cache(mesh);

    if (cls == FormClass::Pr) {
      const int nterms = 3 * (n + 1);
      for (int t = 0; t < nterms; ++t) {
        const int c = random_cell();
        const auto& cell = mesh.cell(c);
        const double coef = uniform();
        // Global monomial factor of degree <= r.
        IndexSet mono_vertices;
        const int deg = static_cast<int>(rng() % (r + 1));
        for (int d = 0; d < deg; ++d)
          mono_vertices.push_back(cell[rng() % cell.size()]);
        // Global alternator d lambda_{i1} ^ ... ^ d lambda_{ik}.
        IndexSet alt;
        while (static_cast<int>(alt.size()) < k) {
          const int vid = cell[rng() % cell.size()];
          if (!contains(alt, vid)) {
            alt.push_back(vid);
            std::sort(alt.begin(), alt.end());
          }
        }
        for (int ci = 0; ci < mesh.num_cells(); ++ci) {
          PolyForm term = PolyForm::constant(n, coef);
          bool dead = false;
          auto lambda_of = [&](int vid) -> PolyForm {
            const int pos = mesh.local_position(ci, vid);
            if (pos < 0)
              return PolyForm(n, 0);
            if (pos == 0)
              return PolyForm::affine(n, 1.0, Vec::Constant(n, -1.0));
            return PolyForm::variable(n, pos - 1);
          };
          for (int vid : mono_vertices) {
            term = wedge(term, lambda_of(vid));
            if (term.terms.empty()) {
              dead = true;
              break;
            }
          }
          if (dead)
            continue;
          for (int vid : alt) {
            const int pos = mesh.local_position(ci, vid);
            PolyForm dl(n, 1);
            if (pos == 0) {
              for (int v = 0; v < n; ++v)
                dl -= PolyForm::dvariable(n, v);
            } else if (pos > 0) {
              dl = PolyForm::dvariable(n, pos - 1);
            }
            term = wedge(term, dl);
            if (term.terms.empty())
              break;
          }
          term.order = k;
          out.cell_forms[ci] += term;
        }
      }
    } else {
      const auto& skeleton = mesh.simplices(k);
      for (const auto& f : skeleton) {
        // One or two polynomial-times-Whitney terms per k-simplex.
        const int nterms = (cls == FormClass::WhitneySpan) ? 1 : 2;
        for (int t = 0; t < nterms; ++t) {
          const double coef = uniform();
          IndexSet mono_vertices;
          if (cls == FormClass::PrMinus) {
            const auto& cells = mesh.cells_containing(f);
            const int deg = static_cast<int>(rng() % r);  // degree <= r-1
            for (int d = 0; d < deg; ++d) {
              const auto& cell = mesh.cell(cells[rng() % cells.size()]);
              mono_vertices.push_back(cell[rng() % cell.size()]);
            }
          }
          for (int ci : mesh.cells_containing(f)) {
            PolyForm term = cache.on_cell(ci, f);
            term *= coef;
            bool dead = false;
            for (int vid : mono_vertices) {
              const int pos = mesh.local_position(ci, vid);
              PolyForm lf(n, 0);
              if (pos == 0)
                lf = PolyForm::affine(n, 1.0, Vec::Constant(n, -1.0));
              else if (pos > 0)
                lf = PolyForm::variable(n, pos - 1);
              term = wedge(lf, term);
              if (term.terms.empty()) {
                dead = true;
                break;
              }
            }
            if (!dead) {
              term.order = k;
              out.cell_forms[ci] += term;
            }
          }
        }
      }
      out.degree = (cls == FormClass::WhitneySpan) ? 1 : r;
    }

    const auto pts = interior_points(mesh, 2, seed ^ 0x5eedu);
    const double sup = sup_norm(out, pts);
    if (sup > 1e-9) {
      out *= 1.0 / sup;
      return out;
    }
  }
  throw std::runtime_error("random_form: failed to draw a nonzero form");
}

}  // namespace bubbletx
