#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dtr/common.hpp"

namespace dtr {

/// The seven thresholded region shapes plus the whole space. "Le" bounds are
/// inclusive, "Gt" bounds are strict.
enum class RegionForm : std::uint8_t { All, Le, Gt, LeLe, LeGt, GtLe, GtGt };

const char* region_form_name(RegionForm f);
RegionForm region_form_from_name(const std::string& name);
bool region_form_is_two_var(RegionForm f);

/// Axis-aligned thresholded subset of the covariate space using at most two
/// coordinates. Two-variable forms require j1 < j2.
struct Region {
  RegionForm form = RegionForm::All;
  int j1 = -1;
  double tau1 = 0.0;
  int j2 = -1;
  double tau2 = 0.0;

  static Region all() { return Region{}; }
  static Region le(int j, double tau) { return Region{RegionForm::Le, j, tau, -1, 0.0}; }
  static Region gt(int j, double tau) { return Region{RegionForm::Gt, j, tau, -1, 0.0}; }
  static Region pair(RegionForm f, int j1, double tau1, int j2, double tau2);

  /// Number of covariates needed to check membership: 0, 1 or 2.
  int var_count() const;

  /// Largest covariate index referenced, or -1 for the whole space.
  int max_index() const;

  bool operator==(const Region&) const = default;
};

/// Membership indicator. Inequalities are exactly "<=" and ">".
template <class Derived>
bool region_contains(const Region& r, const Eigen::MatrixBase<Derived>& x) {
  const Eigen::Index len = x.size();
  if (r.max_index() >= len)
    fail("region_index", "region references covariate " + std::to_string(r.max_index()) +
                             " but the vector has length " + std::to_string(len));
  switch (r.form) {
    case RegionForm::All:
      return true;
    case RegionForm::Le:
      return x(r.j1) <= r.tau1;
    case RegionForm::Gt:
      return x(r.j1) > r.tau1;
    case RegionForm::LeLe:
      return x(r.j1) <= r.tau1 && x(r.j2) <= r.tau2;
    case RegionForm::LeGt:
      return x(r.j1) <= r.tau1 && x(r.j2) > r.tau2;
    case RegionForm::GtLe:
      return x(r.j1) > r.tau1 && x(r.j2) <= r.tau2;
    case RegionForm::GtGt:
      return x(r.j1) > r.tau1 && x(r.j2) > r.tau2;
  }
  return false;
}

/// Fraction of rows of X lying in exactly one of r1, r2 (the empirical mass
/// of the symmetric difference). Zero means the regions pick out the same
/// rows even if their thresholds differ.
double empirical_rho(const Region& r1, const Region& r2, const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Human-readable condition such as "SUM-D > 8.625" or
/// "age <= 40 and SUM-D > 8.5". Not defined for the whole space.
std::string render_condition(const Region& r, const std::vector<std::string>& names);

}  // namespace dtr
