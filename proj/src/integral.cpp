#include "ultra/integral.hpp"

#include <cmath>
#include <cstdio>

namespace ultra {

double sqint(const UltraFun& u) { return u.values.dot(u.basis->eta()); }

double inner(const UltraFun& u, const UltraFun& v) {
  require_same_basis(u, v);
  return u.values.cwiseProduct(v.values).dot(u.basis->eta());
}

double norm(const UltraFun& u) {
  const double s = inner(u, u);
  if (s < 0.0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "pointwise form is negative (%.6e) on this function", s);
    throw IndefiniteFormError(buf);
  }
  return std::sqrt(s);
}

double sqint_over(const UltraFun& u, const CellSet& region) {
  const GammaBasis& b = *u.basis;
  double sum = 0.0;
  for (int c : region.ids()) {
    const CellBlock& blk = b.block(c);
    sum += u.values.segment(blk.offset, blk.size).dot(b.eta().segment(blk.offset, blk.size));
  }
  return sum;
}

double exact_integral(const UltraFun& u) {
  const GammaBasis& b = *u.basis;
  double sum = 0.0;
  for (int c = 0; c < b.partition().cell_count(); ++c) {
    const CellBlock& blk = b.block(c);
    Eigen::VectorXd coeffs = blk.sigma * u.values.segment(blk.offset, blk.size);
    sum += b.space(c).moments().dot(coeffs);
  }
  return sum;
}

double surface_integral(const UltraFun& v, const std::vector<UltraFun>& dtheta) {
  if (static_cast<int>(dtheta.size()) != v.basis->dim())
    throw std::invalid_argument("need one derivative component per axis");
  Eigen::VectorXd mag = Eigen::VectorXd::Zero(v.size());
  for (const auto& c : dtheta) {
    require_same_basis(v, c);
    mag += c.values.cwiseAbs2();
  }
  return v.values.cwiseProduct(mag.cwiseSqrt()).dot(v.basis->eta());
}

}  // namespace ultra
