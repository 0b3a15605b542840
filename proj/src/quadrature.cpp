#include "ultra/quadrature.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/legendre.hpp>

namespace ultra {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss rule needs at least one point");
  std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
  Rule1D r;
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
    if (*it != 0.0) r.nodes.push_back(-*it);
  for (double z : zeros) r.nodes.push_back(z);
  for (double x : r.nodes) {
    double dp = boost::math::legendre_p_prime(n, x);
    r.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return r;
}

// Bonnet recurrence; valid slightly outside [-1, 1] where roundoff puts facet points
double legendre(int degree, double t) {
  double p0 = 1.0, p1 = t;
  if (degree == 0) return p0;
  for (int j = 2; j <= degree; ++j) {
    double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// P'_n = sum of (2j+1) P_j over j = n-1, n-3, ...
double legendre_derivative(int degree, double t) {
  double s = 0.0;
  for (int j = degree - 1; j >= 0; j -= 2) s += (2.0 * j + 1.0) * legendre(j, t);
  return s;
}

Rule cell_rule(const Cell& cell, int dim, int n) {
  Rule1D g = gauss_legendre(n);
  Rule r;
  const double hx = 0.5 * cell.width(0);
  const double cx = cell.center()[0];
  if (dim == 1) {
    for (int i = 0; i < n; ++i) {
      r.points.push_back({cx + hx * g.nodes[i], 0.0});
      r.weights.push_back(hx * g.weights[i]);
    }
    return r;
  }
  const double hy = 0.5 * cell.width(1);
  const double cy = cell.center()[1];
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      r.points.push_back({cx + hx * g.nodes[i], cy + hy * g.nodes[j]});
      r.weights.push_back(hx * hy * g.weights[i] * g.weights[j]);
    }
  }
  return r;
}

Rule facet_rule(const Facet& facet, int dim, int n) {
  Rule r;
  if (dim == 1) {
    r.points.push_back(facet.lo);
    r.weights.push_back(1.0);
    return r;
  }
  Rule1D g = gauss_legendre(n);
  const int along = 1 - facet.axis;
  const double half = 0.5 * (facet.hi[along] - facet.lo[along]);
  const double mid = 0.5 * (facet.hi[along] + facet.lo[along]);
  for (int i = 0; i < n; ++i) {
    Point p = facet.lo;
    p[along] = mid + half * g.nodes[i];
    r.points.push_back(p);
    r.weights.push_back(half * g.weights[i]);
  }
  return r;
}

Rule ball_rule(const Point& center, double radius, int dim, int degree) {
  Rule r;
  if (dim == 1) {
    Rule1D g = gauss_legendre(degree / 2 + 1);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      r.points.push_back({center[0] + radius * g.nodes[i], 0.0});
      r.weights.push_back(radius * g.weights[i]);
    }
    return r;
  }
  // radial integrand carries the Jacobian, so its degree is one higher
  const int n_radial = (degree + 3) / 2;
  const int n_angle = degree + 1;
  Rule1D g = gauss_legendre(n_radial);
  const double dtheta = 2.0 * std::numbers::pi / n_angle;
  for (int a = 0; a < n_angle; ++a) {
    const double th = a * dtheta;
    const double c = std::cos(th), s = std::sin(th);
    for (int i = 0; i < n_radial; ++i) {
      const double rho = 0.5 * (g.nodes[i] + 1.0);
      r.points.push_back({center[0] + radius * rho * c, center[1] + radius * rho * s});
      r.weights.push_back(dtheta * 0.5 * g.weights[i] * rho * radius * radius);
    }
  }
  return r;
}

}  // namespace ultra
