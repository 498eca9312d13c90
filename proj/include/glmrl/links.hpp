#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace glmrl {

/// Scalar link function f on [-1, 1] with declared regularity constants.
///
/// The declared constants must satisfy kappa <= |f'(z)| <= big_k and
/// |f''(z)| <= big_m for every |z| <= 1; `certify_bounds` checks this on a
/// dense grid. A link is immutable after construction and can be shared
/// across threads.
struct LinkSpec {
  using ScalarMap = std::function<double(double)>;

  std::string name;
  ScalarMap eval;
  ScalarMap deriv;
  ScalarMap deriv2;
  /// Closed-form inverse on the link's range; bisection is used when empty.
  ScalarMap inverse;
  double kappa = 0.0;
  double big_k = 0.0;
  double big_m = 0.0;
  /// True when f(z) = z; lets the regression use the exact quadratic solver.
  bool is_identity = false;
};

using LinkPtr = std::shared_ptr<const LinkSpec>;

/// f(z) = z. `unit_curvature_bound` declares M = 1 instead of the true M = 0,
/// which only inflates the exploration bonus.
LinkPtr identity_link(bool unit_curvature_bound = false);

/// f(z) = 1 / (1 + exp(-z)).
LinkPtr logistic_link();

/// Looks up a built-in link ("identity" | "logistic").
LinkPtr link_by_name(const std::string& name, bool unit_curvature_bound = false);

/// f(clamp(z, -1, 1)). Throws InputDomainError for non-finite z.
double eval_link(const LinkSpec& link, double z);

/// Smallest and largest value of f on [-1, 1].
struct LinkRange {
  double lo;
  double hi;
};
LinkRange link_range(const LinkSpec& link);

/// z in [-1, 1] with f(z) = y. Throws RangeError if y is outside f([-1, 1]).
double inverse_link(const LinkSpec& link, double y);

struct CertifiedBounds {
  double kappa;
  double big_k;
  double big_m;
};

/// Extremizes |f'| and |f''| over `grid_points` uniform points of [-1, 1]
/// (endpoints included) using the link's analytic derivatives. Throws
/// AssumptionViolation when f is not strictly monotone on the grid or when
/// the declared constants are looser-than-certified in the wrong direction.
CertifiedBounds certify_bounds(const LinkSpec& link, int grid_points = 100000);

}  // namespace glmrl
