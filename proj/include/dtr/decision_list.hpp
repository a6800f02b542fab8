#pragma once

#include <string>
#include <vector>

#include "dtr/region.hpp"

namespace dtr {

/// One "if x in region then action" rule. Actions are indices into the
/// owning stage's action label set.
struct Clause {
  Region region;
  int action = 0;

  bool operator==(const Clause&) const = default;
};

/// Ordered clause sequence for one stage; the first matching clause fires.
/// A valid list ends with a whole-space clause so every subject is covered.
struct DecisionList {
  int stage = 0;  // 1-based
  std::vector<Clause> clauses;

  bool operator==(const DecisionList&) const = default;
};

struct Regime {
  std::vector<DecisionList> stages;

  bool operator==(const Regime&) const = default;
};

/// Throws if the list is empty, does not end with the whole space, or uses
/// negative covariate indices.
void validate_list(const DecisionList& list);
void validate_regime(const Regime& regime);

/// First-match evaluation; total because the last region is the whole space.
template <class Derived>
int apply_list(const DecisionList& list, const Eigen::MatrixBase<Derived>& x) {
  validate_list(list);
  for (const Clause& c : list.clauses) {
    if (region_contains(c.region, x)) return c.action;
  }
  fail("bad_list", "no clause matched; the final clause must cover the whole space");
}

/// Paragraph rendering in if / else-if / else style, one clause per line.
/// `names` maps covariate indices to display names, `action_labels` maps
/// action indices to display labels.
std::string render_list(const DecisionList& list, const std::vector<std::string>& names,
                        const std::vector<std::string>& action_labels);

/// Regime documents as JSON:
///   {"stages":[{"t":1,"clauses":[{"form":"LE","j":3,"tau":8.625,"action":"x"},
///               ..., {"form":"ALL","action":"y"}]}]}
/// Covariate indices are 0-based. Two-variable forms use j1/tau1/j2/tau2.
/// Action labels are the per-stage label strings.
std::string serialize_regime(const Regime& regime,
                             const std::vector<std::vector<std::string>>& action_labels);

struct ParsedRegime {
  Regime regime;
  std::vector<std::vector<std::string>> action_labels;  // per stage
};

/// Parses and validates a regime document; throws Error("regime_parse", ...)
/// with a location hint on malformed input.
ParsedRegime deserialize_regime(const std::string& text);

}  // namespace dtr
