#include "driftlimit/stencil.hpp"

#include <atomic>
#include <cmath>
#include <ostream>
#include <iomanip>
#include <stdexcept>
#include <vector>

namespace driftlimit {

namespace {

std::atomic<std::uint64_t> g_field_counter{1};

Vec3 unit(const Vec3& B, double* mag) {
  const double m = std::sqrt(dot(B, B));
  if (!(m > 0.0) || !std::isfinite(m))
    throw std::invalid_argument("magnetic field: |B| must be positive and finite");
  *mag = m;
  return scale(1.0 / m, B);
}

// Offsets of the 2^dim cells around node (I,J,K) are (I-1+o0, J-1+o1, K-1+o2);
// the corner nodes of cell (i,j,k) are (i+o0, j+o1, k+o2).  The sign of a
// corner along axis a is +1 for o_a = 1 and -1 for o_a = 0.
struct Corner {
  std::array<int, 3> o;
};

std::vector<Corner> corners(int dim) {
  std::vector<Corner> out;
  const int kz = dim == 3 ? 2 : 1;
  for (int c = 0; c < kz; ++c)
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) out.push_back({{a, b, c}});
  return out;
}

double stencil_weight(const Grid& g) { return 1.0 / static_cast<double>(1 << (g.dim() - 1)); }

}  // namespace

MagneticField::MagneticField(const Grid& g, const std::function<Vec3(const Vec3&)>& B)
    : id_(g_field_counter.fetch_add(1)), cache_(std::make_shared<Cache>()) {
  b_node_.resize(g.num_nodes());
  mag_node_.resize(g.num_nodes());
  for (std::size_t p = 0; p < g.num_nodes(); ++p)
    b_node_[p] = unit(B(g.node_coord(p)), &mag_node_[p]);
  b_cell_.resize(g.num_cells());
  mag_cell_.resize(g.num_cells());
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    b_cell_[c] = unit(B(g.cell_center(c)), &mag_cell_[c]);
}

MagneticField MagneticField::uniform(const Grid& g, const Vec3& B) {
  return MagneticField(g, [B](const Vec3&) { return B; });
}

namespace {

// Signed corner differences per axis, summed pairwise so constants cancel exactly.
template <class Value>
Vec3 axis_differences(const std::vector<Corner>& cs, int dim, Value&& value) {
  std::array<std::array<double, 8>, 3> terms{};
  for (std::size_t k = 0; k < cs.size(); ++k)
    for (int a = 0; a < dim; ++a) {
      const double v = value(cs[k], a);
      terms[a][k] = cs[k].o[a] ? v : -v;
    }
  Vec3 acc{0, 0, 0};
  for (int a = 0; a < dim; ++a) acc[a] = pairwise_sum(terms[a], static_cast<int>(cs.size()));
  return acc;
}

}  // namespace

NodeField apply_dh(const CellField& p, const MagneticField& b, const Grid& g) {
  check_size(p, g, "apply_dh");
  NodeField out(g.num_nodes(), 0.0);
  const auto cs = corners(g.dim());
  const double w = stencil_weight(g);
  const auto& bn = b.b_node();
  for (std::size_t n : g.interior_nodes()) {
    const auto IJK = g.node_ijk(n);
    const Vec3 acc = axis_differences(cs, g.dim(), [&](const Corner& c, int) {
      const int k = g.dim() == 3 ? IJK[2] - 1 + c.o[2] : 0;
      return p[g.cell(IJK[0] - 1 + c.o[0], IJK[1] - 1 + c.o[1], k)];
    });
    double sum = 0.0;
    for (int a = 0; a < g.dim(); ++a) sum += bn[n][a] * acc[a] / g.d(a);
    out[n] = sum * w;
  }
  return out;
}

NodeVecField apply_grad_star(const CellField& p, const Grid& g) {
  check_size(p, g, "apply_grad_star");
  NodeVecField out(g.num_nodes(), Vec3{0, 0, 0});
  const auto cs = corners(g.dim());
  const double w = stencil_weight(g);
  for (std::size_t n : g.interior_nodes()) {
    const auto IJK = g.node_ijk(n);
    const Vec3 acc = axis_differences(cs, g.dim(), [&](const Corner& c, int) {
      const int k = g.dim() == 3 ? IJK[2] - 1 + c.o[2] : 0;
      return p[g.cell(IJK[0] - 1 + c.o[0], IJK[1] - 1 + c.o[1], k)];
    });
    for (int a = 0; a < g.dim(); ++a) out[n][a] = acc[a] * w / g.d(a);
  }
  return out;
}

CellField apply_dhstar(const NodeField& wfield, const MagneticField& b, const Grid& g) {
  check_node_size(wfield, g, "apply_dhstar");
  CellField out(g.num_cells(), 0.0);
  const auto cs = corners(g.dim());
  const double w = stencil_weight(g);
  const auto& bn = b.b_node();
  for (std::size_t cell = 0; cell < g.num_cells(); ++cell) {
    const auto ijk = g.cell_ijk(cell);
    const Vec3 acc = axis_differences(cs, g.dim(), [&](const Corner& c, int a) {
      const std::size_t n = g.node(ijk[0] + c.o[0], ijk[1] + c.o[1],
                                   g.dim() == 3 ? ijk[2] + c.o[2] : 0);
      return bn[n][a] * wfield[n];
    });
    double sum = 0.0;
    for (int a = 0; a < g.dim(); ++a) sum += acc[a] / g.d(a);
    out[cell] = sum * w;
  }
  return out;
}

namespace {

SpMat assemble_dh(const MagneticField& b, const Grid& g) {
  std::vector<Eigen::Triplet<double>> t;
  const auto cs = corners(g.dim());
  const double w = stencil_weight(g);
  t.reserve(g.num_interior_nodes() * cs.size());
  for (std::size_t n : g.interior_nodes()) {
    const auto IJK = g.node_ijk(n);
    const Vec3& bn = b.b_node()[n];
    for (const Corner& c : cs) {
      const int k = g.dim() == 3 ? IJK[2] - 1 + c.o[2] : 0;
      const std::size_t cell = g.cell(IJK[0] - 1 + c.o[0], IJK[1] - 1 + c.o[1], k);
      double v = 0.0;
      for (int a = 0; a < g.dim(); ++a) v += (c.o[a] ? 1.0 : -1.0) * bn[a] * w / g.d(a);
      t.emplace_back(static_cast<int>(n), static_cast<int>(cell), v);
    }
  }
  SpMat m(static_cast<int>(g.num_nodes()), static_cast<int>(g.num_cells()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat assemble_dhs(const MagneticField& b, const Grid& g) {
  std::vector<Eigen::Triplet<double>> t;
  const auto cs = corners(g.dim());
  const double w = stencil_weight(g);
  t.reserve(g.num_cells() * cs.size());
  for (std::size_t cell = 0; cell < g.num_cells(); ++cell) {
    const auto ijk = g.cell_ijk(cell);
    for (const Corner& c : cs) {
      const std::size_t n =
          g.node(ijk[0] + c.o[0], ijk[1] + c.o[1], g.dim() == 3 ? ijk[2] + c.o[2] : 0);
      const Vec3& bn = b.b_node()[n];
      double v = 0.0;
      for (int a = 0; a < g.dim(); ++a) v += (c.o[a] ? 1.0 : -1.0) * bn[a] * w / g.d(a);
      t.emplace_back(static_cast<int>(cell), static_cast<int>(n), v);
    }
  }
  SpMat m(static_cast<int>(g.num_cells()), static_cast<int>(g.num_nodes()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat interior_selector(const Grid& g) {
  std::vector<Eigen::Triplet<double>> t;
  const auto& in = g.interior_nodes();
  for (std::size_t r = 0; r < in.size(); ++r)
    t.emplace_back(static_cast<int>(r), static_cast<int>(in[r]), 1.0);
  SpMat P(static_cast<int>(in.size()), static_cast<int>(g.num_nodes()));
  P.setFromTriplets(t.begin(), t.end());
  return P;
}

void check_coeff(const NodeField& c, const Grid& g) {
  check_node_size(c, g, "assemble_operator");
  for (double v : c)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("assemble_operator: coefficient must be positive");
}

}  // namespace

const OperatorBundle& MagneticField::operators(const Grid& g) const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  if (!cache_->ops) {
    if (b_node_.size() != g.num_nodes())
      throw std::invalid_argument("magnetic field: grid mismatch");
    auto ops = std::make_shared<OperatorBundle>();
    ops->dh = assemble_dh(*this, g);
    ops->dhs = assemble_dhs(*this, g);
    const SpMat P = interior_selector(g);
    const SpMat PT = P.transpose();
    SpMat dhs_in = ops->dhs * PT;
    SpMat dh_in = P * ops->dh;
    ops->n1 = -(dh_in * dhs_in);
    ops->n1.makeCompressed();
    ops->n1_diag.assign(static_cast<std::size_t>(ops->n1.rows()), 0.0);
    for (int r = 0; r < ops->n1.outerSize(); ++r)
      for (SpMat::InnerIterator it(ops->n1, r); it; ++it)
        if (it.col() == r) ops->n1_diag[r] = it.value();
    cache_->ops = std::move(ops);
  }
  return *cache_->ops;
}

std::vector<double> FieldOperator::apply(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != m.cols())
    throw std::invalid_argument("FieldOperator::apply: size mismatch");
  std::vector<double> y(static_cast<std::size_t>(m.rows()));
  Eigen::Map<const Eigen::VectorXd> xm(x.data(), m.cols());
  Eigen::Map<Eigen::VectorXd> ym(y.data(), m.rows());
  ym = m * xm;
  return y;
}

FieldOperator assemble_operator(OperatorKind kind, const MagneticField& b,
                                const NodeField& coeff, const Grid& g) {
  const OperatorBundle& ops = b.operators(g);
  switch (kind) {
    case OperatorKind::Dh:
      return {kind, Space::Cell, Space::Node, ops.dh};
    case OperatorKind::DhStar:
      return {kind, Space::Node, Space::Cell, ops.dhs};
    case OperatorKind::A: {
      check_coeff(coeff, g);
      Eigen::Map<const Eigen::VectorXd> c(coeff.data(), static_cast<int>(coeff.size()));
      SpMat cdh = c.asDiagonal() * ops.dh;
      SpMat a = -(ops.dhs * cdh);
      a.makeCompressed();
      return {kind, Space::Cell, Space::Cell, std::move(a)};
    }
    case OperatorKind::N: {
      check_coeff(coeff, g);
      const auto& in = g.interior_nodes();
      std::vector<Eigen::Triplet<double>> t;
      for (int r = 0; r < ops.n1.outerSize(); ++r)
        for (SpMat::InnerIterator it(ops.n1, r); it; ++it)
          t.emplace_back(static_cast<int>(in[r]), static_cast<int>(in[it.col()]),
                         coeff[in[r]] * it.value());
      for (std::size_t n = 0; n < g.num_nodes(); ++n)
        if (!g.is_interior_node(n)) t.emplace_back(static_cast<int>(n), static_cast<int>(n), 1.0);
      SpMat m(static_cast<int>(g.num_nodes()), static_cast<int>(g.num_nodes()));
      m.setFromTriplets(t.begin(), t.end());
      return {kind, Space::Node, Space::Node, std::move(m)};
    }
  }
  throw std::invalid_argument("assemble_operator: unknown kind");
}

void dump_coo(std::ostream& os, const FieldOperator& op) {
  os << std::setprecision(17);
  for (int r = 0; r < op.m.outerSize(); ++r)
    for (SpMat::InnerIterator it(op.m, r); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

std::vector<double> restrict_interior(const NodeField& w, const Grid& g) {
  check_node_size(w, g, "restrict_interior");
  const auto& in = g.interior_nodes();
  std::vector<double> v(in.size());
  for (std::size_t r = 0; r < in.size(); ++r) v[r] = w[in[r]];
  return v;
}

NodeField extend_interior(const std::vector<double>& v, const Grid& g) {
  const auto& in = g.interior_nodes();
  if (v.size() != in.size()) throw std::invalid_argument("extend_interior: size mismatch");
  NodeField w(g.num_nodes(), 0.0);
  for (std::size_t r = 0; r < in.size(); ++r) w[in[r]] = v[r];
  return w;
}

}  // namespace driftlimit
