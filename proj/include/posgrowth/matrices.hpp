#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "posgrowth/errors.hpp"

namespace posgrowth {

/// Square real matrix with nonnegative off-diagonal entries. Construction
/// goes through validate_metzler(), which also records whether the support
/// digraph (edge j -> i when m(i,j) > 0, i != j) is strongly connected.
class MetzlerMatrix {
 public:
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }
  bool irreducible() const noexcept { return irreducible_; }

  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  friend MetzlerMatrix validate_metzler(const Eigen::MatrixXd& entries);
  MetzlerMatrix(Eigen::MatrixXd entries, bool irreducible)
      : entries_(std::move(entries)), irreducible_(irreducible) {}

  Eigen::MatrixXd entries_;
  bool irreducible_ = false;
};

/// Throws NegativeOffDiagonal (1-based indices), NonFinite, or
/// DimensionMismatch for non-square input or n < 2.
MetzlerMatrix validate_metzler(const Eigen::MatrixXd& entries);

/// Strong connectivity of the off-diagonal support graph, via forward and
/// backward reachability from node 0. Entries are compared with exact zero.
bool is_irreducible(const Eigen::MatrixXd& entries);
inline bool is_irreducible(const MetzlerMatrix& m) { return m.irreducible(); }

/// {G + alpha F : alpha in [a, A]}.
struct Segment {
  Eigen::MatrixXd G;
  Eigen::MatrixXd F;
  double a = 0.0;
  double A = 0.0;
};

struct VertexList {
  std::vector<MetzlerMatrix> matrices;
};

/// Index of a vertex of the control set (bang-bang value).
struct VertexIndex {
  std::size_t value = 0;
  friend bool operator==(VertexIndex, VertexIndex) = default;
};

/// Either a vertex index (any control set) or a segment parameter alpha.
using Control = std::variant<VertexIndex, double>;

/// Compact convex family of irreducible Metzler matrices, given by its
/// extreme points or as an affine segment.
class ControlSet {
 public:
  static ControlSet segment(Eigen::MatrixXd G, Eigen::MatrixXd F, double a, double A);
  static ControlSet vertices(std::vector<MetzlerMatrix> matrices);

  bool is_segment() const noexcept { return std::holds_alternative<Segment>(repr_); }
  const Segment& as_segment() const;
  Eigen::Index dim() const noexcept { return dim_; }

  /// Extreme points: [G+aF, G+AF] for a segment, the list itself otherwise.
  const std::vector<MetzlerMatrix>& vertex_matrices() const noexcept { return vertices_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }

  /// G + alpha F, validated. OutOfRange / WrongVariant.
  MetzlerMatrix at(double alpha) const;

  /// Matrix realised by a control value.
  const Eigen::MatrixXd& matrix(VertexIndex v) const;
  Eigen::MatrixXd matrix(const Control& c) const;

 private:
  std::variant<Segment, VertexList> repr_;
  std::vector<MetzlerMatrix> vertices_;
  Eigen::Index dim_ = 0;
};

std::vector<MetzlerMatrix> vertices(const ControlSet& cs);
MetzlerMatrix at(const ControlSet& cs, double alpha);

struct PerronPair {
  double lambda = 0.0;
  Eigen::VectorXd right;  // e1 > 0, <1, e1> = 1
  Eigen::VectorXd left;   // phi1 > 0, <phi1, e1> = 1
};

/// Full eigen-decomposition of a diagonalizable irreducible Metzler matrix.
/// Eigenvalues are sorted by descending real part. Column i of `right` and
/// row i of `left` form a biorthonormal pair: left.row(i) * right.col(j) = delta_ij.
/// Column 0 / row 0 hold the Perron pair.
struct SpectralData {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right;
  Eigen::MatrixXcd left;
  PerronPair perron;

  /// lambda_1 - max_{i >= 2} Re(lambda_i).
  double spectral_gap() const;
};

/// Throws NotIrreducible, DefectiveSpectrum (minimum eigenvalue gap below 1e-9).
SpectralData spectral(const MetzlerMatrix& m);

/// Perron pair only (same refinement as spectral(), no diagonalizability
/// requirement).
PerronPair perron(const MetzlerMatrix& m);

/// Perron eigenvalue lambda(m).
double perron_value(const MetzlerMatrix& m);

/// Infinity norm (max row sum of |m_ij|).
double inf_norm(const Eigen::MatrixXd& m);

}  // namespace posgrowth
