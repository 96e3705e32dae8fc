#include "driftlimit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace driftlimit {

GridSpec GridSpec::square2d(double a, double b, int nx, int ny) {
  GridSpec s;
  s.dim = 2;
  s.lo = {a, a, 0.0};
  s.hi = {b, b, 1.0};
  s.n = {nx, ny, 1};
  return s;
}

GridSpec GridSpec::box3d(std::array<double, 3> lo, std::array<double, 3> hi,
                         std::array<int, 3> n) {
  GridSpec s;
  s.dim = 3;
  s.lo = lo;
  s.hi = hi;
  s.n = n;
  return s;
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  if (spec.dim != 2 && spec.dim != 3)
    throw std::invalid_argument("grid: dim must be 2 or 3");
  for (int a = 0; a < 3; ++a) {
    const bool active = a < spec.dim;
    if (active) {
      if (spec.n[a] < 2)
        throw std::invalid_argument("grid: axis " + std::to_string(a) +
                                    " needs at least 2 cells");
      const double ext = spec.hi[a] - spec.lo[a];
      if (!(ext > 0.0) || !std::isfinite(ext))
        throw std::invalid_argument("grid: axis " + std::to_string(a) +
                                    " has non-positive extent");
      d_[a] = ext / spec.n[a];
      nc_[a] = spec.n[a];
      nn_[a] = spec.n[a] + 1;
    } else {
      // unit z thickness keeps 2D norms consistent with 3D
      d_[a] = 1.0;
      nc_[a] = 1;
      nn_[a] = 1;
    }
  }
  if (spec.dim == 2) spec_.n[2] = 1;
  num_cells_ = static_cast<std::size_t>(nc_[0]) * nc_[1] * nc_[2];
  num_nodes_ = static_cast<std::size_t>(nn_[0]) * nn_[1] * nn_[2];
  interior_mask_.assign(num_nodes_, 0);
  for (int k = 0; k < nn_[2]; ++k)
    for (int j = 0; j < nn_[1]; ++j)
      for (int i = 0; i < nn_[0]; ++i)
        if (is_interior_node(i, j, k)) {
          const std::size_t p = node(i, j, k);
          interior_mask_[p] = 1;
          interior_.push_back(p);
        }
  num_interior_ = interior_.size();
}

double Grid::h() const {
  double m = d_[0];
  for (int a = 1; a < spec_.dim; ++a) m = std::min(m, d_[a]);
  return m;
}

double Grid::cell_volume() const { return d_[0] * d_[1] * d_[2]; }

std::array<int, 3> Grid::cell_ijk(std::size_t c) const {
  const int i = static_cast<int>(c % nc_[0]);
  const std::size_t r = c / nc_[0];
  const int j = static_cast<int>(r % nc_[1]);
  const int k = static_cast<int>(r / nc_[1]);
  return {i, j, k};
}

std::array<int, 3> Grid::node_ijk(std::size_t p) const {
  const int i = static_cast<int>(p % nn_[0]);
  const std::size_t r = p / nn_[0];
  const int j = static_cast<int>(r % nn_[1]);
  const int k = static_cast<int>(r / nn_[1]);
  return {i, j, k};
}

bool Grid::is_interior_node(int i, int j, int k) const {
  const std::array<int, 3> ijk{i, j, k};
  for (int a = 0; a < spec_.dim; ++a)
    if (ijk[a] <= 0 || ijk[a] >= nn_[a] - 1) return false;
  return true;
}

Vec3 Grid::cell_center(std::size_t c) const {
  const auto ijk = cell_ijk(c);
  Vec3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < spec_.dim; ++a) x[a] = spec_.lo[a] + (ijk[a] + 0.5) * d_[a];
  return x;
}

Vec3 Grid::node_coord(std::size_t p) const {
  const auto ijk = node_ijk(p);
  Vec3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < spec_.dim; ++a) x[a] = spec_.lo[a] + ijk[a] * d_[a];
  return x;
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

void check_size(const CellField& u, const Grid& g, const char* what) {
  if (u.size() != g.num_cells())
    throw std::invalid_argument(std::string(what) + ": cell field size mismatch");
}

void check_node_size(const NodeField& w, const Grid& g, const char* what) {
  if (w.size() != g.num_nodes())
    throw std::invalid_argument(std::string(what) + ": node field size mismatch");
}

namespace {

double scale_by(double s, double v) { return s * v; }
Vec3 scale_by(double s, const Vec3& v) { return scale(s, v); }

// Visits the cells adjacent to a node that exist in I.
template <class F>
void for_node_cells(const Grid& g, int I, int J, int K, F&& f) {
  const int kz = g.dim() == 3 ? 2 : 1;
  for (int c = 0; c < kz; ++c) {
    const int k = g.dim() == 3 ? K - 1 + c : 0;
    if (k < 0 || k >= g.nc(2)) continue;
    for (int b = 0; b < 2; ++b) {
      const int j = J - 1 + b;
      if (j < 0 || j >= g.nc(1)) continue;
      for (int a = 0; a < 2; ++a) {
        const int i = I - 1 + a;
        if (i < 0 || i >= g.nc(0)) continue;
        f(g.cell(i, j, k));
      }
    }
  }
}

template <class F>
void for_cell_nodes(const Grid& g, int i, int j, int k, F&& f) {
  const int kz = g.dim() == 3 ? 2 : 1;
  for (int c = 0; c < kz; ++c)
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) f(g.node(i + a, j + b, k + c));
}

template <class T>
std::vector<T> node_average_impl(const std::vector<T>& u, const Grid& g, T zero) {
  std::vector<T> w(g.num_nodes(), zero);
  for (int K = 0; K < g.nn(2); ++K)
    for (int J = 0; J < g.nn(1); ++J)
      for (int I = 0; I < g.nn(0); ++I) {
        // 1, 2, 4 or 8 adjacent cells, always a power of two
        std::array<T, 8> terms;
        int cnt = 0;
        for_node_cells(g, I, J, K, [&](std::size_t c) { terms[cnt++] = u[c]; });
        w[g.node(I, J, K)] = scale_by(1.0 / cnt, pairwise_sum(terms, cnt));
      }
  return w;
}

template <class T>
std::vector<T> cell_from_nodes_impl(const std::vector<T>& w, const Grid& g, T zero) {
  std::vector<T> u(g.num_cells(), zero);
  const int corners = g.dim() == 3 ? 8 : 4;
  for (int k = 0; k < g.nc(2); ++k)
    for (int j = 0; j < g.nc(1); ++j)
      for (int i = 0; i < g.nc(0); ++i) {
        std::array<T, 8> terms;
        int cnt = 0;
        for_cell_nodes(g, i, j, k, [&](std::size_t p) { terms[cnt++] = w[p]; });
        u[g.cell(i, j, k)] = scale_by(1.0 / corners, pairwise_sum(terms, cnt));
      }
  return u;
}

}  // namespace

NodeField node_average(const CellField& u, const Grid& g) {
  check_size(u, g, "node_average");
  return node_average_impl<double>(u, g, 0.0);
}

NodeVecField node_average(const CellVecField& u, const Grid& g) {
  if (u.size() != g.num_cells())
    throw std::invalid_argument("node_average: cell field size mismatch");
  return node_average_impl<Vec3>(u, g, Vec3{0, 0, 0});
}

CellField cell_from_nodes(const NodeField& w, const Grid& g) {
  check_node_size(w, g, "cell_from_nodes");
  return cell_from_nodes_impl<double>(w, g, 0.0);
}

CellVecField cell_from_nodes(const NodeVecField& w, const Grid& g) {
  if (w.size() != g.num_nodes())
    throw std::invalid_argument("cell_from_nodes: node field size mismatch");
  return cell_from_nodes_impl<Vec3>(w, g, Vec3{0, 0, 0});
}

Norms discrete_norms(const CellField& u, const Grid& g) {
  check_size(u, g, "discrete_norms");
  const double vol = g.cell_volume();
  Norms r;
  double s2 = 0.0;
  for (double v : u) {
    r.l1 += std::abs(v);
    s2 += v * v;
    r.linf = std::max(r.linf, std::abs(v));
  }
  r.l1 *= vol;
  r.l2 = std::sqrt(s2 * vol);
  return r;
}

void write_csv(std::ostream& os, const CellField& u, const Grid& g) {
  check_size(u, g, "write_csv");
  os << "x,y,value\n" << std::setprecision(17);
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const Vec3 x = g.cell_center(c);
    os << x[0] << ',' << x[1] << ',' << u[c] << '\n';
  }
}

void write_csv(std::ostream& os, const CellVecField& u, const Grid& g) {
  if (u.size() != g.num_cells())
    throw std::invalid_argument("write_csv: cell field size mismatch");
  os << "x,y,vx,vy,vz\n" << std::setprecision(17);
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const Vec3 x = g.cell_center(c);
    os << x[0] << ',' << x[1] << ',' << u[c][0] << ',' << u[c][1] << ',' << u[c][2]
       << '\n';
  }
}

void write_csv(const std::string& path, const CellField& u, const Grid& g) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  write_csv(f, u, g);
}

void write_csv(const std::string& path, const CellVecField& u, const Grid& g) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  write_csv(f, u, g);
}

}  // namespace driftlimit
