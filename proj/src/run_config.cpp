#include "dtr/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dtr {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail("bad_config", "key '" + key + "' expects a number, got '" + value + "'");
  }
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail("bad_config", "key '" + key + "' expects an integer, got '" + value + "'");
  }
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (const std::string& s : out)
    if (s.empty()) fail("bad_config", "empty entry in list '" + value + "'");
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& s : split_list(value)) out.push_back(parse_double(key, s));
  if (out.empty()) fail("bad_config", "key '" + key + "' expects a nonempty list");
  return out;
}

// stage{t}.covariates / action / reward
bool apply_stage_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key.rfind("stage", 0) != 0) return false;
  std::size_t i = 5;
  int stage = 0;
  while (i < key.size() && key[i] >= '0' && key[i] <= '9') {
    stage = stage * 10 + (key[i] - '0');
    ++i;
  }
  if (stage < 1 || i >= key.size() || key[i] != '.') return false;
  const std::string field = key.substr(i + 1);
  if (static_cast<int>(cfg.schema.size()) < stage) cfg.schema.resize(static_cast<std::size_t>(stage));
  StageColumns& st = cfg.schema[static_cast<std::size_t>(stage - 1)];
  if (field == "covariates") {
    st.covariates = split_list(value);
  } else if (field == "action") {
    st.action = split_list(value);
    if (st.action.empty() || st.action.size() > 2)
      fail("bad_config", "key '" + key + "' expects one or two column names");
  } else if (field == "reward") {
    st.reward = value;
  } else {
    fail("bad_config", "unknown key '" + key + "'");
  }
  return true;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("bad_config", "line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail("bad_config", "line " + std::to_string(line_no) + " is missing a key or value");

    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(key, value));
      if (cfg.threads < 1) fail("bad_config", "threads must be positive");
    } else if (key == "missing") {
      if (value == "drop")
        cfg.missing = MissingPolicy::Drop;
      else if (value == "carry_forward")
        cfg.missing = MissingPolicy::CarryForward;
      else
        fail("bad_config", "missing policy must be drop or carry_forward, got '" + value + "'");
    } else if (key == "krr.log_gamma_min") {
      cfg.fit.krr.log_gamma_min = parse_double(key, value);
    } else if (key == "krr.log_gamma_max") {
      cfg.fit.krr.log_gamma_max = parse_double(key, value);
    } else if (key == "krr.log_lambda_min") {
      cfg.fit.krr.log_lambda_min = parse_double(key, value);
    } else if (key == "krr.log_lambda_max") {
      cfg.fit.krr.log_lambda_max = parse_double(key, value);
    } else if (key == "krr.starts") {
      cfg.fit.krr.starts = static_cast<int>(parse_int(key, value));
    } else if (key == "krr.sweeps") {
      cfg.fit.krr.sweeps = static_cast<int>(parse_int(key, value));
    } else if (key == "list.l_max") {
      cfg.fit.list.max_clauses = static_cast<int>(parse_int(key, value));
      if (cfg.fit.list.max_clauses < 1) fail("bad_config", "list.l_max must be positive");
    } else if (key == "list.folds") {
      cfg.fit.list.folds = static_cast<int>(parse_int(key, value));
      if (cfg.fit.list.folds < 2) fail("bad_config", "list.folds must be at least 2");
    } else if (key == "list.zeta_grid") {
      cfg.fit.list.zeta_grid = parse_double_list(key, value);
    } else if (key == "list.eta_grid") {
      cfg.fit.list.eta_grid = parse_double_list(key, value);
    } else if (!apply_stage_key(cfg, key, value)) {
      fail("bad_config", "unknown key '" + key + "'");
    }
  }

  // A partially specified stage schema is almost certainly a mistake.
  for (std::size_t t = 0; t < cfg.schema.size(); ++t) {
    const StageColumns& st = cfg.schema[t];
    if (st.action.empty() || st.reward.empty())
      fail("bad_config",
           "stage" + std::to_string(t + 1) + " schema needs both an action and a reward column");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace dtr
