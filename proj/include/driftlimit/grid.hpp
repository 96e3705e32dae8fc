#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftlimit {

using Vec3 = std::array<double, 3>;

using CellField = std::vector<double>;
using NodeField = std::vector<double>;
using CellVecField = std::vector<Vec3>;
using NodeVecField = std::vector<Vec3>;

// A file could not be opened or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int dim = 2;
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
  std::array<int, 3> n{2, 2, 1};

  static GridSpec square2d(double a, double b, int nx, int ny);
  static GridSpec box3d(std::array<double, 3> lo, std::array<double, 3> hi,
                        std::array<int, 3> n);
};

// Cells are indexed (i,j,k) with x fastest; nodes likewise over (n+1) points
// per active axis.  In 2D the z axis is inert: one cell layer, one node layer,
// and every z-difference is absent.  Node (i+1,j+1,k+1) sits at the upper
// corner of cell (i,j,k).
class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  double d(int axis) const { return d_[axis]; }
  double h() const;  // min spacing over active axes
  double cell_volume() const;

  int nc(int axis) const { return nc_[axis]; }
  int nn(int axis) const { return nn_[axis]; }
  std::size_t num_cells() const { return num_cells_; }
  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_interior_nodes() const { return num_interior_; }

  std::size_t cell(int i, int j, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(nc_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(nc_[1]) * k);
  }
  std::size_t node(int i, int j, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(nn_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(nn_[1]) * k);
  }
  std::array<int, 3> cell_ijk(std::size_t c) const;
  std::array<int, 3> node_ijk(std::size_t p) const;

  bool is_interior_node(int i, int j, int k = 0) const;
  bool is_interior_node(std::size_t p) const { return interior_mask_[p] != 0; }
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }

  Vec3 cell_center(std::size_t c) const;
  Vec3 node_coord(std::size_t p) const;

  CellField cell_field(double value = 0.0) const { return CellField(num_cells_, value); }
  NodeField node_field(double value = 0.0) const { return NodeField(num_nodes_, value); }
  CellVecField cell_vec_field(Vec3 value = {0, 0, 0}) const {
    return CellVecField(num_cells_, value);
  }
  NodeVecField node_vec_field(Vec3 value = {0, 0, 0}) const {
    return NodeVecField(num_nodes_, value);
  }

 private:
  GridSpec spec_;
  std::array<double, 3> d_{};
  std::array<int, 3> nc_{};
  std::array<int, 3> nn_{};
  std::size_t num_cells_ = 0;
  std::size_t num_nodes_ = 0;
  std::size_t num_interior_ = 0;
  std::vector<std::size_t> interior_;
  std::vector<unsigned char> interior_mask_;
};

Grid build_grid(const GridSpec& spec);

NodeField node_average(const CellField& u, const Grid& g);
NodeVecField node_average(const CellVecField& u, const Grid& g);
CellField cell_from_nodes(const NodeField& w, const Grid& g);
CellVecField cell_from_nodes(const NodeVecField& w, const Grid& g);

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

Norms discrete_norms(const CellField& u, const Grid& g);

void write_csv(std::ostream& os, const CellField& u, const Grid& g);
void write_csv(std::ostream& os, const CellVecField& u, const Grid& g);
void write_csv(const std::string& path, const CellField& u, const Grid& g);
void write_csv(const std::string& path, const CellVecField& u, const Grid& g);

void check_size(const CellField& u, const Grid& g, const char* what);
void check_node_size(const NodeField& w, const Grid& g, const char* what);

// Small vector helpers shared by the physics modules.
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 axpy(double s, const Vec3& x, const Vec3& y) {
  return {s * x[0] + y[0], s * x[1] + y[1], s * x[2] + y[2]};
}
inline Vec3 scale(double s, const Vec3& x) { return {s * x[0], s * x[1], s * x[2]}; }
inline Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline double plus(double a, double b) { return a + b; }
inline Vec3 plus(const Vec3& a, const Vec3& b) { return add(a, b); }

// Pairwise sum of n = 1, 2, 4 or 8 terms.  Equal terms are summed exactly, so
// averages and stencils reproduce constants without round-off.
template <class T, std::size_t N>
T pairwise_sum(std::array<T, N> v, int n) {
  for (; n > 1; n /= 2)
    for (int i = 0; i < n / 2; ++i) v[i] = plus(v[2 * i], v[2 * i + 1]);
  return v[0];
}

inline Vec3 parallel(const Vec3& b, const Vec3& v) { return scale(dot(b, v), b); }
inline Vec3 perp(const Vec3& b, const Vec3& v) { return sub(v, parallel(b, v)); }

}  // namespace driftlimit
