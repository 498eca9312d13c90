#include "glmrl/links.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glmrl/error.hpp"

namespace glmrl {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

LinkPtr identity_link(bool unit_curvature_bound) {
  auto link = std::make_shared<LinkSpec>();
  link->name = "identity";
  link->eval = [](double z) { return z; };
  link->deriv = [](double) { return 1.0; };
  link->deriv2 = [](double) { return 0.0; };
  link->inverse = [](double y) { return y; };
  link->kappa = 1.0;
  link->big_k = 1.0;
  link->big_m = unit_curvature_bound ? 1.0 : 0.0;
  link->is_identity = true;
  return link;
}

LinkPtr logistic_link() {
  auto link = std::make_shared<LinkSpec>();
  link->name = "logistic";
  link->eval = logistic;
  link->deriv = [](double z) {
    const double s = logistic(z);
    return s * (1.0 - s);
  };
  link->deriv2 = [](double z) {
    const double s = logistic(z);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  };
  link->inverse = [](double y) { return std::log(y / (1.0 - y)); };
  // |f'| is smallest and |f''| largest at |z| = 1 on the restricted interval;
  // f' peaks at z = 0.
  const double s1 = logistic(1.0);
  link->kappa = s1 * (1.0 - s1);
  link->big_k = 0.25;
  link->big_m = s1 * (1.0 - s1) * (2.0 * s1 - 1.0);
  return link;
}

LinkPtr link_by_name(const std::string& name, bool unit_curvature_bound) {
  if (name == "identity") return identity_link(unit_curvature_bound);
  if (name == "logistic") return logistic_link();
  throw ConfigError("unknown link '" + name + "' (expected identity | logistic)");
}

double eval_link(const LinkSpec& link, double z) {
  if (!std::isfinite(z)) throw InputDomainError("link argument is not finite");
  return link.eval(std::clamp(z, -1.0, 1.0));
}

LinkRange link_range(const LinkSpec& link) {
  const double a = link.eval(-1.0);
  const double b = link.eval(1.0);
  return {std::min(a, b), std::max(a, b)};
}

double inverse_link(const LinkSpec& link, double y) {
  if (!std::isfinite(y)) throw InputDomainError("inverse link argument is not finite");
  const auto [lo, hi] = link_range(link);
  constexpr double kEdge = 1e-12;
  if (y < lo - kEdge || y > hi + kEdge) {
    throw RangeError("value " + std::to_string(y) + " is outside the range of link '" +
                     link.name + "'");
  }
  y = std::clamp(y, lo, hi);
  if (link.inverse) return std::clamp(link.inverse(y), -1.0, 1.0);

  // Bisection on [-1, 1]; orientation follows the sign of f(1) - f(-1).
  const bool increasing = link.eval(1.0) >= link.eval(-1.0);
  double a = -1.0;
  double b = 1.0;
  for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
    const double mid = 0.5 * (a + b);
    const bool below = link.eval(mid) < y;
    if (below == increasing) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

CertifiedBounds certify_bounds(const LinkSpec& link, int grid_points) {
  if (grid_points < 1000) throw ParameterError("certify_bounds needs at least 1000 grid points");
  CertifiedBounds out{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  double prev = 0.0;
  int direction = 0;
  for (int i = 0; i < grid_points; ++i) {
    const double z = -1.0 + 2.0 * static_cast<double>(i) / (grid_points - 1);
    const double fz = link.eval(z);
    const double d1 = std::abs(link.deriv(z));
    const double d2 = std::abs(link.deriv2(z));
    out.kappa = std::min(out.kappa, d1);
    out.big_k = std::max(out.big_k, d1);
    out.big_m = std::max(out.big_m, d2);
    if (i > 0) {
      const int step = fz > prev ? 1 : (fz < prev ? -1 : 0);
      if (step == 0 || (direction != 0 && step != direction)) {
        throw AssumptionViolation("link '" + link.name + "' is not strictly monotone near z = " +
                                  std::to_string(z));
      }
      direction = step;
    }
    prev = fz;
  }
  if (link.kappa > out.kappa || link.big_k < out.big_k || link.big_m < out.big_m ||
      link.kappa <= 0.0 || link.kappa > link.big_k) {
    throw AssumptionViolation("declared constants of link '" + link.name +
                              "' are not certified by the grid");
  }
  return out;
}

}  // namespace glmrl
