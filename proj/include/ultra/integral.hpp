#pragma once

#include <vector>

#include "ultra/basis.hpp"

namespace ultra {

class IndefiniteFormError : public Error {
 public:
  using Error::Error;
};

/// Pointwise integral: sum over Gamma of u(a) eta_a.
double sqint(const UltraFun& u);
double inner(const UltraFun& u, const UltraFun& v);
/// Throws IndefiniteFormError when inner(u, u) < 0.
double norm(const UltraFun& u);

/// Pointwise integral restricted to the Gamma blocks of the cells of E.
double sqint_over(const UltraFun& u, const CellSet& region);

/// Exact integral of the member of the space with these nodal values,
/// computed from the local moments rather than from eta.
double exact_integral(const UltraFun& u);

/// sum over Gamma of v |D theta_A| eta, given the components of D theta_A.
double surface_integral(const UltraFun& v, const std::vector<UltraFun>& dtheta);

}  // namespace ultra
