#include "ultra/derivative.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ultra/quadrature.hpp"

namespace ultra {

BoundaryMode partner(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::Dirichlet:
      return BoundaryMode::Natural;
    case BoundaryMode::Natural:
      return BoundaryMode::Dirichlet;
    default:
      return BoundaryMode::HalfZero;
  }
}

const char* to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::Dirichlet:
      return "dirichlet";
    case BoundaryMode::Natural:
      return "natural";
    default:
      return "half-zero";
  }
}

BoundaryMode BoundarySpec::of(int facet) const {
  auto it = overrides.find(facet);
  return it == overrides.end() ? mode : it->second;
}

BoundarySpec BoundarySpec::partnered() const {
  BoundarySpec out{partner(mode), {}};
  for (const auto& [f, m] : overrides) out.overrides[f] = partner(m);
  return out;
}

namespace {

double jump_weight(BoundaryMode m) {
  switch (m) {
    case BoundaryMode::Dirichlet:
      return 1.0;
    case BoundaryMode::Natural:
      return 0.0;
    default:
      return 0.5;
  }
}

void add_block(std::vector<Eigen::Triplet<double>>& out, const std::vector<int>& idx, const Eigen::MatrixXd& m) {
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) out.emplace_back(idx[i], idx[j], m(i, j));
}

std::vector<int> block_index(const GammaBasis& b, int cell) {
  const CellBlock& blk = b.block(cell);
  std::vector<int> idx(blk.size);
  for (int j = 0; j < blk.size; ++j) idx[j] = blk.offset + j;
  return idx;
}

// traces of a cell's nodal functions at quadrature points, one row per point
Eigen::MatrixXd traces(const GammaBasis& b, int cell, const std::vector<Point>& pts) {
  return b.space(cell).values(pts) * b.block(cell).sigma;
}

}  // namespace

SpaceSplit::SpaceSplit(BasisPtr basis) : basis_(std::move(basis)) {
  const GammaBasis& b = *basis_;
  degree_ = (b.options().degree + 1) / 2;
  for (int c = 0; c < b.partition().cell_count(); ++c) {
    const LocalSpace& sp = b.space(c);
    const CellBlock& blk = b.block(c);
    std::vector<int> cols;
    for (std::size_t j = 0; j < sp.modes().size(); ++j)
      if (sp.modes()[j][0] + sp.modes()[j][1] <= degree_) cols.push_back(sp.bump_count() + static_cast<int>(j));
    Eigen::MatrixXd vals = sp.values(blk.points);
    Eigen::MatrixXd y(blk.size, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) y.col(j) = vals.col(cols[j]);
    Eigen::MatrixXd gy = blk.gram * y;
    Eigen::MatrixXd small = y.transpose() * gy;
    blocks_.push_back(y * small.ldlt().solve(gy.transpose()));
  }
}

Eigen::SparseMatrix<double> SpaceSplit::matrix() const {
  const GammaBasis& b = *basis_;
  std::vector<Eigen::Triplet<double>> t;
  for (int c = 0; c < b.partition().cell_count(); ++c) add_block(t, block_index(b, c), blocks_[c]);
  Eigen::SparseMatrix<double> m(b.size(), b.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

UltraFun SpaceSplit::to_u1(const UltraFun& u) const {
  if (u.basis != basis_) throw std::invalid_argument("function lives on a different basis");
  UltraFun out(basis_);
  for (int c = 0; c < basis_->partition().cell_count(); ++c) {
    const CellBlock& blk = basis_->block(c);
    out.values.segment(blk.offset, blk.size) = blocks_[c] * u.values.segment(blk.offset, blk.size);
  }
  return out;
}

UltraFun SpaceSplit::to_u0(const UltraFun& u) const { return u - to_u1(u); }

DerivOperator DerivOperator::assemble(const SpaceSplit& split, int axis, const BoundarySpec& bc) {
  const BasisPtr& basis = split.basis();
  const GammaBasis& b = *basis;
  const Partition& p = b.partition();
  if (axis < 0 || axis >= b.dim()) throw std::invalid_argument("axis out of range");

  std::string bad;
  for (int a = 0; a < b.size(); ++a) {
    if (std::abs(b.eta()[a]) <= 1e-14 * p.cell(b.owner(a)).measure) {
      char buf[96];
      std::snprintf(buf, sizeof buf, " point %d (cell %d, eta %.3e)", a, b.owner(a), b.eta()[a]);
      bad += buf;
    }
  }
  if (!bad.empty()) throw Error("pointwise form is singular, vanishing weights at" + bad);

  DerivOperator op;
  op.basis_ = basis;
  op.axis_ = axis;
  op.bc_ = bc;

  for (int c = 0; c < p.cell_count(); ++c) {
    const LocalSpace& sp = b.space(c);
    const CellBlock& blk = b.block(c);
    const Eigen::MatrixXd& P = split.block(c);
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(blk.size, blk.size) - P;
    Eigen::MatrixXd hs = b.eta().segment(blk.offset, blk.size).asDiagonal() * (sp.derivatives(blk.points, axis) * blk.sigma);
    Eigen::MatrixXd k = blk.sigma.transpose() * sp.stiffness(axis) * blk.sigma;
    Eigen::MatrixXd v = hs * P - P.transpose() * hs.transpose() * Q + Q.transpose() * k * Q;
    add_block(op.volume_, block_index(b, c), v);
  }

  const int nq = b.options().degree + 2;
  for (const Facet& f : p.facets()) {
    if (f.axis != axis) continue;
    Rule r = facet_rule(f, b.dim(), nq);
    Eigen::Map<const Eigen::VectorXd> w(r.weights.data(), r.weights.size());
    const int qc = f.left;
    const double n = f.normal_from(qc)[axis];
    Eigen::MatrixXd tq = traces(b, qc, r.points);
    const int nqd = static_cast<int>(tq.cols());
    FacetPart part;
    part.facet = f.id;
    part.index = block_index(b, qc);
    Eigen::MatrixXd F, Fp, P;
    if (f.exterior()) {
      Eigen::MatrixXd mass = tq.transpose() * w.asDiagonal() * tq;
      F = -jump_weight(bc.of(f.id)) * n * mass;
      Fp = -jump_weight(partner(bc.of(f.id))) * n * mass;
      P = split.block(qc);
    } else {
      const int rc = f.right;
      Eigen::MatrixXd tr = traces(b, rc, r.points);
      const int nr = static_cast<int>(tr.cols());
      auto ri = block_index(b, rc);
      part.index.insert(part.index.end(), ri.begin(), ri.end());
      F = Eigen::MatrixXd::Zero(nqd + nr, nqd + nr);
      F.topLeftCorner(nqd, nqd) = -0.5 * n * tq.transpose() * w.asDiagonal() * tq;
      F.topRightCorner(nqd, nr) = 0.5 * n * tq.transpose() * w.asDiagonal() * tr;
      F.bottomRightCorner(nr, nr) = 0.5 * n * tr.transpose() * w.asDiagonal() * tr;
      F.bottomLeftCorner(nr, nqd) = -0.5 * n * tr.transpose() * w.asDiagonal() * tq;
      Fp = F;
      P = Eigen::MatrixXd::Zero(nqd + nr, nqd + nr);
      P.topLeftCorner(nqd, nqd) = split.block(qc);
      P.bottomRightCorner(nr, nr) = split.block(rc);
    }
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - P;
    part.x = F * P - P.transpose() * Fp.transpose() * Q + Q.transpose() * F * Q;
    op.facets_.push_back(std::move(part));
  }

  op.hm_ = op.weak_with_weights(nullptr);
  op.m_ = b.eta().cwiseInverse().asDiagonal() * op.hm_;
  return op;
}

Eigen::SparseMatrix<double> DerivOperator::weak_with_weights(const std::vector<double>* weights) const {
  std::vector<Eigen::Triplet<double>> t = volume_;
  for (const FacetPart& part : facets_) {
    const double s = weights ? (*weights)[part.facet] : 1.0;
    if (s == 0.0) continue;
    add_block(t, part.index, s * part.x);
  }
  Eigen::SparseMatrix<double> m(basis_->size(), basis_->size());
  m.setFromTriplets(t.begin(), t.end());
  m.prune(0.0);
  return m;
}

Eigen::SparseMatrix<double> DerivOperator::matrix_with_weights(const std::vector<double>& weights) const {
  if (weights.size() != basis_->partition().facets().size())
    throw std::invalid_argument("need one weight per facet");
  return basis_->eta().cwiseInverse().asDiagonal() * weak_with_weights(&weights);
}

UltraFun DerivOperator::apply(const UltraFun& u) const {
  if (u.basis != basis_) throw std::invalid_argument("function lives on a different basis");
  return UltraFun(basis_, m_ * u.values);
}

void DerivOperator::write_triplets(std::ostream& os) const {
  char buf[96];
  for (int k = 0; k < m_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m_, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value());
      os << buf;
    }
}

Gradient Gradient::assemble(const BasisPtr& basis, const BoundarySpec& bc) {
  SpaceSplit split(basis);
  Gradient g;
  for (int i = 0; i < basis->dim(); ++i) g.d.push_back(DerivOperator::assemble(split, i, bc));
  return g;
}

UltraFun divergence(const Gradient& grad, const std::vector<UltraFun>& phi) {
  if (static_cast<int>(phi.size()) != grad.dim()) throw std::invalid_argument("need one component per axis");
  UltraFun out(grad.basis());
  for (int i = 0; i < grad.dim(); ++i) out += grad[i].apply(phi[i]);
  return out;
}

UltraFun laplacian(const Gradient& grad, const UltraFun& u) {
  UltraFun out(grad.basis());
  for (int i = 0; i < grad.dim(); ++i) out += grad[i].apply(grad[i].apply(u));
  return out;
}

Eigen::SparseMatrix<double> laplacian_matrix(const Gradient& grad) {
  Eigen::SparseMatrix<double> out(grad.basis()->size(), grad.basis()->size());
  for (int i = 0; i < grad.dim(); ++i) out += grad[i].matrix() * grad[i].matrix();
  return out;
}

double theta_derivative_pairing(const Gradient& grad, const CellSet& region, const UltraFun& v, int axis) {
  UltraFun th = theta_of(grad.basis(), region);
  if (v.basis != grad.basis()) throw std::invalid_argument("function lives on a different basis");
  return v.values.dot(grad[axis].weak() * th.values);
}

}  // namespace ultra
