#include "ultra/localspace.hpp"

#include <algorithm>
#include <cmath>

#include "ultra/quadrature.hpp"

namespace ultra {

double bump_profile(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  const double u = 1.0 - t * t;
  return u * u;
}

double Bump::value(const Point& x, int dim) const {
  double s2 = 0.0;
  for (int a = 0; a < dim; ++a) s2 += (x[a] - center[a]) * (x[a] - center[a]);
  s2 /= radius * radius;
  if (s2 >= 1.0) return 0.0;
  return (1.0 - s2) * (1.0 - s2);
}

double Bump::derivative(const Point& x, int dim, int axis) const {
  double s2 = 0.0;
  for (int a = 0; a < dim; ++a) s2 += (x[a] - center[a]) * (x[a] - center[a]);
  const double r2 = radius * radius;
  s2 /= r2;
  if (s2 >= 1.0) return 0.0;
  return -4.0 * (1.0 - s2) * (x[axis] - center[axis]) / r2;
}

SeedSet make_seeds(const Partition& partition, int per_axis) {
  if (per_axis < 0) throw std::invalid_argument("seeds per axis must be >= 0");
  SeedSet seeds;
  seeds.per_axis = per_axis;
  seeds.by_cell.assign(partition.cell_count(), {});
  if (per_axis == 0) return seeds;
  const int d = partition.dim();
  double spacing = 0.0;
  bool found = false;
  for (int a = 0; a < d; ++a) {
    if (partition.cells_along(a) * per_axis >= 2) {
      double s = partition.spacing(a) / per_axis;
      spacing = found ? std::min(spacing, s) : s;
      found = true;
    }
  }
  if (!found) spacing = partition.min_spacing() / per_axis;
  seeds.radius = spacing / 3.0;
  for (const auto& c : partition.cells()) {
    const int ny = d == 2 ? per_axis : 1;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < per_axis; ++i) {
        Bump b;
        b.cell = c.id;
        b.radius = seeds.radius;
        b.center[0] = c.lo[0] + (i + 0.5) / per_axis * c.width(0);
        if (d == 2) b.center[1] = c.lo[1] + (j + 0.5) / per_axis * c.width(1);
        seeds.by_cell[c.id].push_back(static_cast<int>(seeds.bumps.size()));
        seeds.bumps.push_back(b);
      }
    }
  }
  return seeds;
}

int local_dim(int degree, int dim, int seeds_in_cell) {
  if (degree < 1) throw std::invalid_argument("degree must be >= 1");
  int n = 1;
  for (int a = 0; a < dim; ++a) n *= degree + 1;
  return n + seeds_in_cell;
}

LocalSpace::LocalSpace(const Partition& partition, int cell, int degree, const SeedSet& seeds)
    : cell_(partition.cell(cell)), dim_(partition.dim()), degree_(degree) {
  if (degree < 1) throw std::invalid_argument("degree must be >= 1");
  if (static_cast<int>(seeds.by_cell.size()) != partition.cell_count())
    throw std::invalid_argument("seed set does not belong to this partition");
  for (int s : seeds.in_cell(cell)) bumps_.push_back(seeds.bumps[s]);
  const int ny = dim_ == 2 ? degree : 0;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; b <= ny; ++b) modes_.push_back({a, b});
  integrate();
}

int LocalSpace::mode_index(int deg_x, int deg_y) const {
  for (std::size_t m = 0; m < modes_.size(); ++m)
    if (modes_[m][0] == deg_x && modes_[m][1] == deg_y) return bump_count() + static_cast<int>(m);
  throw std::out_of_range("mode not in local space");
}

Eigen::VectorXd LocalSpace::values(const Point& x) const {
  Eigen::VectorXd v(space_dim());
  const int nb = bump_count();
  for (int b = 0; b < nb; ++b) v[b] = bumps_[b].value(x, dim_);
  std::array<std::vector<double>, 2> leg;
  for (int a = 0; a < dim_; ++a) {
    const double t = (x[a] - cell_.center()[a]) / (0.5 * cell_.width(a));
    for (int j = 0; j <= degree_; ++j) leg[a].push_back(legendre(j, t));
  }
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    double p = leg[0][modes_[m][0]];
    if (dim_ == 2) p *= leg[1][modes_[m][1]];
    v[nb + m] = p;
  }
  return v;
}

Eigen::VectorXd LocalSpace::derivatives(const Point& x, int axis) const {
  Eigen::VectorXd v(space_dim());
  const int nb = bump_count();
  for (int b = 0; b < nb; ++b) v[b] = bumps_[b].derivative(x, dim_, axis);
  std::array<std::vector<double>, 2> leg;
  for (int a = 0; a < dim_; ++a) {
    const double half = 0.5 * cell_.width(a);
    const double t = (x[a] - cell_.center()[a]) / half;
    for (int j = 0; j <= degree_; ++j)
      leg[a].push_back(a == axis ? legendre_derivative(j, t) / half : legendre(j, t));
  }
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    double p = leg[0][modes_[m][0]];
    if (dim_ == 2) p *= leg[1][modes_[m][1]];
    v[nb + m] = p;
  }
  return v;
}

Eigen::MatrixXd LocalSpace::values(const std::vector<Point>& xs) const {
  Eigen::MatrixXd out(xs.size(), space_dim());
  for (std::size_t i = 0; i < xs.size(); ++i) out.row(i) = values(xs[i]).transpose();
  return out;
}

Eigen::MatrixXd LocalSpace::derivatives(const std::vector<Point>& xs, int axis) const {
  Eigen::MatrixXd out(xs.size(), space_dim());
  for (std::size_t i = 0; i < xs.size(); ++i) out.row(i) = derivatives(xs[i], axis).transpose();
  return out;
}

void LocalSpace::integrate() {
  const int n = space_dim();
  const int nb = bump_count();
  gram_ = Eigen::MatrixXd::Zero(n, n);
  moments_ = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < 2; ++a) stiffness_[a] = Eigen::MatrixXd::Zero(n, n);

  // polynomial block: exact with k+2 points per axis
  Rule cr = cell_rule(cell_, dim_, degree_ + 2);
  for (std::size_t q = 0; q < cr.size(); ++q) {
    const double w = cr.weights[q];
    Eigen::VectorXd v = values(cr.points[q]).tail(n - nb);
    gram_.bottomRightCorner(n - nb, n - nb) += w * v * v.transpose();
    moments_.tail(n - nb) += w * v;
    for (int a = 0; a < dim_; ++a) {
      Eigen::VectorXd dv = derivatives(cr.points[q], a).tail(n - nb);
      stiffness_[a].bottomRightCorner(n - nb, n - nb) += w * v * dv.transpose();
    }
  }

  // anything touching a bump lives on its ball, where the bump is a quartic polynomial
  const int degree = std::max(2 * degree_ + 4, 8);
  for (int b = 0; b < nb; ++b) {
    Rule br = ball_rule(bumps_[b].center, bumps_[b].radius, dim_, degree);
    for (std::size_t q = 0; q < br.size(); ++q) {
      const double w = br.weights[q];
      Eigen::VectorXd v = values(br.points[q]);
      const double zb = v[b];
      moments_[b] += w * zb;
      gram_(b, b) += w * zb * zb;
      for (int j = nb; j < n; ++j) {
        gram_(b, j) += w * zb * v[j];
        gram_(j, b) += w * zb * v[j];
      }
      for (int a = 0; a < dim_; ++a) {
        Eigen::VectorXd dv = derivatives(br.points[q], a);
        stiffness_[a](b, b) += w * zb * dv[b];
        for (int j = nb; j < n; ++j) {
          stiffness_[a](b, j) += w * zb * dv[j];
          stiffness_[a](j, b) += w * v[j] * dv[b];
        }
      }
    }
  }
}

double LocalSpace::eval(const Eigen::VectorXd& coeffs, const Point& x) const {
  const double theta = cell_density(cell_, dim_, x);
  if (theta == 0.0) return 0.0;
  return theta * values(x).dot(coeffs);
}

}  // namespace ultra
