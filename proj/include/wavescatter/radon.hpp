#pragma once

// Radon transform on R^3 of BumpFunctions: plane integrals over {y.omega = sigma}
// computed term by term on the disk where the plane cuts each term's ball.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wavescatter/numerics.hpp"

namespace wavescatter {

/// Disk quadrature resolution: Gauss-Legendre nodes in u = rho^2 and uniform
/// angular nodes. The angular rule must be exact for the modulation degree.
struct RadonRule {
  int radial_nodes = 48;
  int angular_nodes = 16;

  static RadonRule from_level(int level) {
    if (level < 1) throw std::invalid_argument("RadonRule: level must be >= 1");
    return {16 * level, 8 * level + 8};
  }
};

/// Orthonormal frame (e1, e2) of the plane perpendicular to omega.
struct PlaneFrame {
  Vec3 e1{};
  Vec3 e2{};
};

inline void require_unit(const Vec3& omega) {
  if (std::abs(norm(omega) - 1.0) > 1e-12) throw std::invalid_argument("direction omega must be a unit vector");
}

/// Gram-Schmidt from the coordinate axis least aligned with omega; ties go to
/// the lowest axis index so the frame is reproducible.
inline PlaneFrame plane_frame(const Vec3& omega) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(omega[i]) < std::abs(omega[k])) k = i;
  Vec3 a{0, 0, 0};
  a[k] = 1.0;
  Vec3 e1 = a - omega[k] * omega;
  e1 = (1.0 / norm(e1)) * e1;
  return {e1, cross(omega, e1)};
}

/// Quadrature nodes and weights over the disk {y.omega = sigma} intersected
/// with one ball; empty when the plane misses the ball.
class PlaneSliceRule {
 public:
  PlaneSliceRule(const Ball& ball, double sigma, const Vec3& omega, const RadonRule& rule = {}) {
    const double d = sigma - dot(ball.center, omega);
    const double r2 = ball.radius * ball.radius - d * d;
    if (r2 <= 0.0) return;
    frame_ = plane_frame(omega);
    const Vec3 foot = ball.center + d * omega;
    const QuadratureRule1D gl = gauss_legendre(rule.radial_nodes, 0.0, r2);
    const double dphi = 2.0 * pi / rule.angular_nodes;
    nodes_.reserve(gl.nodes.size() * rule.angular_nodes);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double rho = std::sqrt(gl.nodes[i]);
      // area element rho d rho d phi = (1/2) du d phi
      const double w = 0.5 * gl.weights[i] * dphi;
      for (int k = 0; k < rule.angular_nodes; ++k) {
        const double phi = k * dphi;
        nodes_.push_back(foot + (rho * std::cos(phi)) * frame_.e1 + (rho * std::sin(phi)) * frame_.e2);
        weights_.push_back(w);
      }
    }
  }

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const PlaneFrame& frame() const { return frame_; }
  bool empty() const { return nodes_.empty(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < nodes_.size(); ++q) s += weights_[q] * f(nodes_[q]);
    return s;
  }

 private:
  PlaneFrame frame_{};
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
};

namespace detail {

/// Sum over terms of the plane integral of integrand(term, x) on the term's disk.
template <class Integrand>
double plane_integral(const BumpFunction& f, double sigma, const Vec3& omega, const RadonRule& rule,
                      Integrand&& integrand) {
  require_unit(omega);
  double s = 0.0;
  for (const auto& t : f.terms()) {
    const double d = sigma - dot(t.center, omega);
    if (std::abs(d) >= t.radius) continue;
    const PlaneSliceRule slice(Ball{t.center, t.radius}, sigma, omega, rule);
    s += slice.integrate([&](const Vec3& x) { return integrand(t, x); });
  }
  return s;
}

}  // namespace detail

/// R[f](sigma, omega) = integral of f over the plane {y.omega = sigma}.
inline double radon(const BumpFunction& f, double sigma, const Vec3& omega, const RadonRule& rule = {}) {
  return detail::plane_integral(f, sigma, omega, rule,
                                [](const BumpTerm& t, const Vec3& x) { return BumpFunction::term_value(t, x); });
}

/// d/dsigma R[f] = R[omega . grad f].
inline double radon_sigma_derivative(const BumpFunction& f, double sigma, const Vec3& omega,
                                     const RadonRule& rule = {}) {
  return detail::plane_integral(f, sigma, omega, rule, [&](const BumpTerm& t, const Vec3& x) {
    return dot(omega, BumpFunction::term_gradient(t, x));
  });
}

/// d^2/dsigma^2 R[f] = R[omega^T Hess f omega].
inline double radon_sigma_second(const BumpFunction& f, double sigma, const Vec3& omega,
                                  const RadonRule& rule = {}) {
  return detail::plane_integral(f, sigma, omega, rule, [&](const BumpTerm& t, const Vec3& x) {
    return quadratic_form(BumpFunction::term_hessian(t, x), omega);
  });
}

/// R[partial_k f], for checking the derivative identity independently.
inline double radon_of_partial(const BumpFunction& f, int k, double sigma, const Vec3& omega,
                               const RadonRule& rule = {}) {
  return detail::plane_integral(f, sigma, omega, rule, [&](const BumpTerm& t, const Vec3& x) {
    return BumpFunction::term_gradient(t, x)[k];
  });
}

/// Support of sigma -> R[f](sigma, omega) is inside [-bound, bound].
inline double radon_support_bound(const BumpFunction& f) { return f.support_radius(); }

}  // namespace wavescatter
