#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>

#include "driftlimit/grid.hpp"

namespace driftlimit {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct OperatorBundle;

// Magnetic field direction b = B/|B| and magnitude, sampled at nodes and
// cells.  Assembled operators are cached on the instance, so copies share
// the cache and a new field always gets fresh operators.
class MagneticField {
 public:
  MagneticField(const Grid& g, const std::function<Vec3(const Vec3&)>& B);
  static MagneticField uniform(const Grid& g, const Vec3& B);

  const NodeVecField& b_node() const { return b_node_; }
  const NodeField& mag_node() const { return mag_node_; }
  const CellVecField& b_cell() const { return b_cell_; }
  const CellField& mag_cell() const { return mag_cell_; }
  std::uint64_t id() const { return id_; }

  const OperatorBundle& operators(const Grid& g) const;

 private:
  NodeVecField b_node_;
  NodeField mag_node_;
  CellVecField b_cell_;
  CellField mag_cell_;
  std::uint64_t id_ = 0;
  struct Cache {
    std::mutex mu;
    std::shared_ptr<const OperatorBundle> ops;
  };
  std::shared_ptr<Cache> cache_;
};

// Matrix-free three-point operators.  apply_dh and apply_grad_star vanish on
// boundary nodes, which is the homogeneous condition on I-bar-star \ I-star.
NodeField apply_dh(const CellField& p, const MagneticField& b, const Grid& g);
CellField apply_dhstar(const NodeField& w, const MagneticField& b, const Grid& g);
NodeVecField apply_grad_star(const CellField& p, const Grid& g);

enum class Space { Cell, Node };
enum class OperatorKind { Dh, DhStar, A, N };

struct FieldOperator {
  OperatorKind kind;
  Space domain;
  Space codomain;
  SpMat m;

  std::vector<double> apply(const std::vector<double>& x) const;
};

// A_c = -dh_star(c dh .), cell -> cell, with dh p = 0 on boundary nodes.
// N_c = -c dh(dh_star .), node -> node, with w = 0 on boundary nodes
// (boundary rows are identity rows).  coeff is a node field, unused for Dh
// and DhStar.
FieldOperator assemble_operator(OperatorKind kind, const MagneticField& b,
                                const NodeField& coeff, const Grid& g);

void dump_coo(std::ostream& os, const FieldOperator& op);

// Cached per magnetic field.  n1 acts on interior nodes only, in the order
// of Grid::interior_nodes().
struct OperatorBundle {
  SpMat dh;    // nodes x cells
  SpMat dhs;   // cells x nodes
  SpMat n1;    // interior x interior, -dh dhs restricted
  std::vector<double> n1_diag;
};

std::vector<double> restrict_interior(const NodeField& w, const Grid& g);
NodeField extend_interior(const std::vector<double>& v, const Grid& g);

}  // namespace driftlimit
