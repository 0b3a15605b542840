#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include <Eigen/Sparse>

#include "ultra/basis.hpp"

namespace ultra {

/// What a boundary facet contributes. HalfZero is the half jump against the
/// zero exterior state, Dirichlet the full jump, Natural nothing. Dirichlet and
/// Natural are adjoint to each other; HalfZero is its own partner.
enum class BoundaryMode { HalfZero, Dirichlet, Natural };

BoundaryMode partner(BoundaryMode mode);
const char* to_string(BoundaryMode mode);

struct BoundarySpec {
  BoundaryMode mode = BoundaryMode::HalfZero;
  /// per boundary-facet id
  std::map<int, BoundaryMode> overrides;

  BoundaryMode of(int facet) const;
  BoundarySpec partnered() const;
};

/// Cellwise split of the space into U1 (polynomials of total degree
/// <= floor((k+1)/2) on each cell) and its complement U0 under the plain
/// integral product.
class SpaceSplit {
 public:
  explicit SpaceSplit(BasisPtr basis);

  const BasisPtr& basis() const { return basis_; }
  int u1_degree() const { return degree_; }
  /// Projector onto U1 restricted to one cell's Gamma block.
  const Eigen::MatrixXd& block(int cell) const { return blocks_.at(cell); }
  Eigen::SparseMatrix<double> matrix() const;

  UltraFun to_u1(const UltraFun& u) const;
  UltraFun to_u0(const UltraFun& u) const;

 private:
  BasisPtr basis_;
  int degree_;
  std::vector<Eigen::MatrixXd> blocks_;
};

/// Generalized partial derivative along one axis, stored as
///   H M = V + sum_F w_F X_F,   H = diag(eta),
/// where V is the volume part and X_F the part contributed by facet F.
/// Facet weights default to 1; variational code drops facets by setting 0.
class DerivOperator {
 public:
  static DerivOperator assemble(const SpaceSplit& split, int axis, const BoundarySpec& bc = {});

  int axis() const { return axis_; }
  const BasisPtr& basis() const { return basis_; }
  const BoundarySpec& boundary() const { return bc_; }

  /// Strong form M on Gamma values.
  const Eigen::SparseMatrix<double>& matrix() const { return m_; }
  /// Weak form H M.
  const Eigen::SparseMatrix<double>& weak() const { return hm_; }
  /// M with facet f's contribution scaled by weights[f] (one weight per partition facet).
  Eigen::SparseMatrix<double> matrix_with_weights(const std::vector<double>& weights) const;

  UltraFun apply(const UltraFun& u) const;

  /// "row col value" lines, 0-based, one nonzero per line.
  void write_triplets(std::ostream& os) const;

 private:
  struct FacetPart {
    int facet;
    std::vector<int> index;
    Eigen::MatrixXd x;
  };
  BasisPtr basis_;
  int axis_ = 0;
  BoundarySpec bc_;
  std::vector<Eigen::Triplet<double>> volume_;
  std::vector<FacetPart> facets_;
  Eigen::SparseMatrix<double> hm_, m_;

  Eigen::SparseMatrix<double> weak_with_weights(const std::vector<double>* weights) const;
};

/// One operator per axis.
struct Gradient {
  std::vector<DerivOperator> d;

  static Gradient assemble(const BasisPtr& basis, const BoundarySpec& bc = {});
  int dim() const { return static_cast<int>(d.size()); }
  const BasisPtr& basis() const { return d.front().basis(); }
  const DerivOperator& operator[](int axis) const { return d.at(axis); }
};

UltraFun divergence(const Gradient& grad, const std::vector<UltraFun>& phi);
UltraFun laplacian(const Gradient& grad, const UltraFun& u);
/// sum_i M_i M_i
Eigen::SparseMatrix<double> laplacian_matrix(const Gradient& grad);

/// pointwise integral of D_axis(theta_E) v
double theta_derivative_pairing(const Gradient& grad, const CellSet& region, const UltraFun& v, int axis);

}  // namespace ultra
