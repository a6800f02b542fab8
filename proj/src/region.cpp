#include "dtr/region.hpp"

#include <vector>

namespace dtr {

const char* region_form_name(RegionForm f) {
  switch (f) {
    case RegionForm::All: return "ALL";
    case RegionForm::Le: return "LE";
    case RegionForm::Gt: return "GT";
    case RegionForm::LeLe: return "LE_LE";
    case RegionForm::LeGt: return "LE_GT";
    case RegionForm::GtLe: return "GT_LE";
    case RegionForm::GtGt: return "GT_GT";
  }
  return "?";
}

RegionForm region_form_from_name(const std::string& name) {
  if (name == "ALL") return RegionForm::All;
  if (name == "LE") return RegionForm::Le;
  if (name == "GT") return RegionForm::Gt;
  if (name == "LE_LE") return RegionForm::LeLe;
  if (name == "LE_GT") return RegionForm::LeGt;
  if (name == "GT_LE") return RegionForm::GtLe;
  if (name == "GT_GT") return RegionForm::GtGt;
  fail("bad_region_form", "unknown region form '" + name + "'");
}

bool region_form_is_two_var(RegionForm f) {
  return f == RegionForm::LeLe || f == RegionForm::LeGt || f == RegionForm::GtLe ||
         f == RegionForm::GtGt;
}

Region Region::pair(RegionForm f, int j1, double tau1, int j2, double tau2) {
  if (!region_form_is_two_var(f)) fail("bad_region_form", "pair() requires a two-variable form");
  if (!(j1 >= 0 && j1 < j2))
    fail("bad_region", "two-variable regions require 0 <= j1 < j2, got j1=" +
                           std::to_string(j1) + " j2=" + std::to_string(j2));
  return Region{f, j1, tau1, j2, tau2};
}

int Region::var_count() const {
  if (form == RegionForm::All) return 0;
  return region_form_is_two_var(form) ? 2 : 1;
}

int Region::max_index() const {
  return form == RegionForm::All ? -1 : (region_form_is_two_var(form) ? j2 : j1);
}

double empirical_rho(const Region& r1, const Region& r2,
                     const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::Index n = X.rows();
  if (n == 0) return 0.0;
  Eigen::Index diff = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (region_contains(r1, X.row(i)) != region_contains(r2, X.row(i))) ++diff;
  }
  return static_cast<double>(diff) / static_cast<double>(n);
}

namespace {

std::string one_condition(int j, double tau, bool is_le, const std::vector<std::string>& names) {
  if (j < 0 || static_cast<std::size_t>(j) >= names.size())
    fail("region_index", "no column name for index " + std::to_string(j));
  return names[static_cast<std::size_t>(j)] + (is_le ? " <= " : " > ") + format_double(tau);
}

}  // namespace

std::string render_condition(const Region& r, const std::vector<std::string>& names) {
  switch (r.form) {
    case RegionForm::All:
      fail("bad_region", "the whole space has no condition to render");
    case RegionForm::Le: return one_condition(r.j1, r.tau1, true, names);
    case RegionForm::Gt: return one_condition(r.j1, r.tau1, false, names);
    case RegionForm::LeLe:
      return one_condition(r.j1, r.tau1, true, names) + " and " +
             one_condition(r.j2, r.tau2, true, names);
    case RegionForm::LeGt:
      return one_condition(r.j1, r.tau1, true, names) + " and " +
             one_condition(r.j2, r.tau2, false, names);
    case RegionForm::GtLe:
      return one_condition(r.j1, r.tau1, false, names) + " and " +
             one_condition(r.j2, r.tau2, true, names);
    case RegionForm::GtGt:
      return one_condition(r.j1, r.tau1, false, names) + " and " +
             one_condition(r.j2, r.tau2, false, names);
  }
  return {};
}

}  // namespace dtr
