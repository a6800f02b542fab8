#include "dtr/decision_list.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

namespace dtr {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void validate_list(const DecisionList& list) {
  if (list.clauses.empty()) fail("bad_list", "decision list has no clauses");
  if (list.clauses.back().region.form != RegionForm::All)
    fail("bad_list", "the final clause must cover the whole space");
  for (const Clause& c : list.clauses) {
    if (c.action < 0) fail("bad_list", "negative action index");
    const Region& r = c.region;
    if (r.var_count() >= 1 && r.j1 < 0) fail("bad_region", "negative covariate index");
    if (r.var_count() == 2 && !(r.j1 < r.j2))
      fail("bad_region", "two-variable regions require j1 < j2");
  }
}

void validate_regime(const Regime& regime) {
  if (regime.stages.empty()) fail("bad_regime", "regime has no stages");
  for (const DecisionList& list : regime.stages) validate_list(list);
}

std::string render_list(const DecisionList& list, const std::vector<std::string>& names,
                        const std::vector<std::string>& action_labels) {
  validate_list(list);
  auto label = [&](int a) -> std::string {
    if (a < 0 || static_cast<std::size_t>(a) >= action_labels.size())
      fail("bad_list", "no label for action index " + std::to_string(a));
    return action_labels[static_cast<std::size_t>(a)];
  };
  std::ostringstream out;
  bool first = true;
  for (std::size_t k = 0; k < list.clauses.size(); ++k) {
    const Clause& c = list.clauses[k];
    if (c.region.form == RegionForm::All) {
      out << "Else " << label(c.action) << ".";
      break;  // anything after a whole-space clause is unreachable
    }
    out << (first ? "If " : "Else if ") << render_condition(c.region, names) << " then "
        << label(c.action) << ";\n";
    first = false;
  }
  return out.str();
}

namespace {

ordered_json clause_to_json(const Clause& c, const std::vector<std::string>& labels) {
  ordered_json j;
  const Region& r = c.region;
  j["form"] = region_form_name(r.form);
  if (r.var_count() == 1) {
    j["j"] = r.j1;
    j["tau"] = r.tau1;
  } else if (r.var_count() == 2) {
    j["j1"] = r.j1;
    j["tau1"] = r.tau1;
    j["j2"] = r.j2;
    j["tau2"] = r.tau2;
  }
  if (c.action < 0 || static_cast<std::size_t>(c.action) >= labels.size())
    fail("bad_list", "no label for action index " + std::to_string(c.action));
  j["action"] = labels[static_cast<std::size_t>(c.action)];
  return j;
}

Clause clause_from_json(const json& j, std::vector<std::string>& labels, int stage,
                        std::size_t pos) {
  auto where = [&] {
    return "stage " + std::to_string(stage) + " clause " + std::to_string(pos + 1);
  };
  if (!j.is_object()) fail("regime_parse", where() + ": clause must be an object");
  if (!j.contains("form") || !j["form"].is_string())
    fail("regime_parse", where() + ": missing string field 'form'");
  if (!j.contains("action") || !j["action"].is_string())
    fail("regime_parse", where() + ": missing string field 'action'");
  Region r;
  try {
    r.form = region_form_from_name(j["form"].get<std::string>());
  } catch (const Error& e) {
    fail("regime_parse", where() + ": " + e.what());
  }
  auto need_num = [&](const char* key) -> double {
    if (!j.contains(key) || !j[key].is_number())
      fail("regime_parse", where() + ": missing numeric field '" + std::string(key) + "'");
    return j[key].get<double>();
  };
  if (r.var_count() == 1) {
    r.j1 = static_cast<int>(need_num("j"));
    r.tau1 = need_num("tau");
  } else if (r.var_count() == 2) {
    r.j1 = static_cast<int>(need_num("j1"));
    r.tau1 = need_num("tau1");
    r.j2 = static_cast<int>(need_num("j2"));
    r.tau2 = need_num("tau2");
    if (!(r.j1 >= 0 && r.j1 < r.j2))
      fail("regime_parse", where() + ": two-variable regions require 0 <= j1 < j2");
  }
  const std::string label = j["action"].get<std::string>();
  int action = -1;
  for (std::size_t a = 0; a < labels.size(); ++a) {
    if (labels[a] == label) {
      action = static_cast<int>(a);
      break;
    }
  }
  if (action < 0) {
    labels.push_back(label);
    action = static_cast<int>(labels.size()) - 1;
  }
  return Clause{r, action};
}

}  // namespace

std::string serialize_regime(const Regime& regime,
                             const std::vector<std::vector<std::string>>& action_labels) {
  validate_regime(regime);
  if (action_labels.size() != regime.stages.size())
    fail("bad_regime", "need one action label set per stage");
  ordered_json doc;
  doc["stages"] = ordered_json::array();
  for (std::size_t s = 0; s < regime.stages.size(); ++s) {
    const DecisionList& list = regime.stages[s];
    ordered_json js;
    js["t"] = list.stage;
    js["clauses"] = ordered_json::array();
    for (const Clause& c : list.clauses) js["clauses"].push_back(clause_to_json(c, action_labels[s]));
    doc["stages"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

ParsedRegime deserialize_regime(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("regime_parse", e.what());
  }
  if (!doc.is_object() || !doc.contains("stages") || !doc["stages"].is_array())
    fail("regime_parse", "document must be an object with a 'stages' array");
  ParsedRegime out;
  for (const auto& js : doc["stages"]) {
    if (!js.is_object() || !js.contains("t") || !js["t"].is_number())
      fail("regime_parse", "each stage needs a numeric 't'");
    DecisionList list;
    list.stage = js["t"].get<int>();
    std::vector<std::string> labels;
    if (!js.contains("clauses") || !js["clauses"].is_array() || js["clauses"].empty())
      fail("regime_parse", "stage " + std::to_string(list.stage) + ": empty clause list");
    std::size_t pos = 0;
    for (const auto& jc : js["clauses"]) {
      list.clauses.push_back(clause_from_json(jc, labels, list.stage, pos));
      ++pos;
    }
    if (list.clauses.back().region.form != RegionForm::All)
      fail("regime_parse",
           "stage " + std::to_string(list.stage) + ": the last clause must have form ALL");
    out.regime.stages.push_back(std::move(list));
    out.action_labels.push_back(std::move(labels));
  }
  validate_regime(out.regime);
  return out;
}

}  // namespace dtr
