#pragma once

#include <vector>

#include "ultra/geometry.hpp"

namespace ultra {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

struct Rule {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre rule with n points on [-1, 1], nodes ascending.
Rule1D gauss_legendre(int n);

double legendre(int degree, double t);
double legendre_derivative(int degree, double t);

/// Tensor Gauss rule with n points per axis on a cell.
Rule cell_rule(const Cell& cell, int dim, int n);

/// Gauss rule with n points on a facet; a single unit-weight point in 1D.
Rule facet_rule(const Facet& facet, int dim, int n);

/// Rule on the ball of given radius, exact for polynomials of total degree <= degree.
/// Polar in 2D (trapezoid in angle, Gauss in radius), Gauss on the interval in 1D.
Rule ball_rule(const Point& center, double radius, int dim, int degree);

}  // namespace ultra
