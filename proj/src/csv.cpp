#include "dtr/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dtr/common.hpp"

namespace dtr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na"; }

std::optional<double> parse_number(const std::string& s) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && *begin == ' ') ++begin;
  double v = 0.0;
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

// "s3_name" -> (3, "name"); "s3" -> (3, ""); returns stage 0 when the prefix
// does not match.
struct ColumnTag {
  char kind = '?';  // 's', 'a', 'y'
  int stage = 0;
  std::string suffix;  // covariate name part, or "1"/"2" for paired actions
};

ColumnTag parse_column_name(const std::string& name) {
  ColumnTag tag;
  if (name.size() < 2) return tag;
  const char kind = name[0];
  if (kind != 's' && kind != 'a' && kind != 'y') return tag;
  std::size_t i = 1;
  int stage = 0;
  while (i < name.size() && name[i] >= '0' && name[i] <= '9') {
    stage = stage * 10 + (name[i] - '0');
    ++i;
  }
  if (stage == 0) return tag;
  if (i < name.size()) {
    if (name[i] != '_') return tag;
    tag.suffix = name.substr(i + 1);
    if (tag.suffix.empty()) return tag;
  }
  tag.kind = kind;
  tag.stage = stage;
  return tag;
}

}  // namespace

std::vector<StageColumns> schema_from_header(const std::vector<std::string>& header) {
  int max_stage = 0;
  for (const std::string& name : header) {
    const ColumnTag tag = parse_column_name(name);
    if (tag.kind == '?')
      fail("csv_schema", "column '" + name + "' does not match s{t}[_{name}], a{t}[_k] or y{t}");
    max_stage = std::max(max_stage, tag.stage);
  }
  std::vector<StageColumns> schema(static_cast<std::size_t>(max_stage));
  for (const std::string& name : header) {
    const ColumnTag tag = parse_column_name(name);
    StageColumns& st = schema[static_cast<std::size_t>(tag.stage - 1)];
    if (tag.kind == 's') {
      st.covariates.push_back(name);
    } else if (tag.kind == 'a') {
      st.action.push_back(name);
    } else {
      if (!st.reward.empty()) fail("csv_schema", "duplicate reward column for stage " +
                                                     std::to_string(tag.stage));
      st.reward = name;
    }
  }
  for (std::size_t t = 0; t < schema.size(); ++t) {
    const std::string at = "stage " + std::to_string(t + 1);
    if (schema[t].action.empty()) fail("csv_schema", at + " has no action column");
    if (schema[t].action.size() > 2) fail("csv_schema", at + " has more than two action columns");
    if (schema[t].reward.empty()) fail("csv_schema", at + " has no reward column");
  }
  return schema;
}

std::vector<std::string> read_csv_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail("csv_schema", "'" + path + "' is empty");
  return split_line(line);
}

TrajectoryDataset read_trajectories_csv(std::istream& in, const std::vector<StageColumns>& schema,
                                        MissingPolicy missing, CsvReadReport* report) {
  std::string line;
  if (!std::getline(in, line)) fail("csv_schema", "missing header line");
  const std::vector<std::string> header = split_line(line);
  std::map<std::string, int> col_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!col_index.emplace(header[c], static_cast<int>(c)).second)
      fail("csv_schema", "duplicate column '" + header[c] + "'");
  }
  auto need = [&](const std::string& name) -> int {
    auto it = col_index.find(name);
    if (it == col_index.end()) fail("csv_schema", "column '" + name + "' not found");
    return it->second;
  };

  const int T = static_cast<int>(schema.size());
  struct StageIdx {
    std::vector<int> cov;
    std::vector<int> act;
    int reward = -1;
  };
  std::vector<StageIdx> idx(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    for (const auto& c : schema[static_cast<std::size_t>(t)].covariates)
      idx[static_cast<std::size_t>(t)].cov.push_back(need(c));
    for (const auto& c : schema[static_cast<std::size_t>(t)].action)
      idx[static_cast<std::size_t>(t)].act.push_back(need(c));
    idx[static_cast<std::size_t>(t)].reward = need(schema[static_cast<std::size_t>(t)].reward);
  }

  // Carry-forward sources: same covariate name suffix in an earlier stage.
  std::vector<std::vector<int>> carry_from(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    carry_from[static_cast<std::size_t>(t)].assign(
        schema[static_cast<std::size_t>(t)].covariates.size(), -1);
    for (std::size_t j = 0; j < schema[static_cast<std::size_t>(t)].covariates.size(); ++j) {
      const ColumnTag tag = parse_column_name(schema[static_cast<std::size_t>(t)].covariates[j]);
      if (tag.suffix.empty()) continue;
      for (int s = t - 1; s >= 0; --s) {
        for (std::size_t k = 0; k < schema[static_cast<std::size_t>(s)].covariates.size(); ++k) {
          const ColumnTag prev =
              parse_column_name(schema[static_cast<std::size_t>(s)].covariates[k]);
          if (prev.suffix == tag.suffix) {
            carry_from[static_cast<std::size_t>(t)][j] = idx[static_cast<std::size_t>(s)].cov[k];
            break;
          }
        }
        if (carry_from[static_cast<std::size_t>(t)][j] >= 0) break;
      }
    }
  }

  struct RawRow {
    std::vector<std::string> fields;
  };
  std::vector<RawRow> rows;
  int line_no = 1;
  int dropped = 0;
  std::vector<std::vector<std::vector<double>>> cov_values(static_cast<std::size_t>(T));
  std::vector<std::vector<std::string>> act_values(static_cast<std::size_t>(T));
  std::vector<std::vector<double>> reward_values(static_cast<std::size_t>(T));

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      fail("csv_row", "row " + std::to_string(line_no) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(header.size()));
    auto field_number = [&](int col, const std::string& what) -> std::optional<double> {
      const std::string& s = fields[static_cast<std::size_t>(col)];
      if (is_missing(s)) return std::nullopt;
      const auto v = parse_number(s);
      if (!v)
        fail("csv_row", "row " + std::to_string(line_no) + ": " + what + " value '" + s +
                            "' in column '" + header[static_cast<std::size_t>(col)] +
                            "' is not numeric");
      return v;
    };

    bool drop = false;
    std::vector<std::vector<double>> row_cov(static_cast<std::size_t>(T));
    std::vector<std::string> row_act(static_cast<std::size_t>(T));
    std::vector<double> row_reward(static_cast<std::size_t>(T), 0.0);
    for (int t = 0; t < T && !drop; ++t) {
      auto& sidx = idx[static_cast<std::size_t>(t)];
      for (std::size_t j = 0; j < sidx.cov.size() && !drop; ++j) {
        std::optional<double> v = field_number(sidx.cov[j], "covariate");
        if (!v && missing == MissingPolicy::CarryForward &&
            carry_from[static_cast<std::size_t>(t)][j] >= 0)
          v = field_number(carry_from[static_cast<std::size_t>(t)][j], "covariate");
        if (!v) {
          drop = true;
          break;
        }
        row_cov[static_cast<std::size_t>(t)].push_back(*v);
      }
      if (drop) break;
      std::string label;
      for (std::size_t k = 0; k < sidx.act.size(); ++k) {
        const std::string& s = fields[static_cast<std::size_t>(sidx.act[k])];
        if (is_missing(s)) {
          drop = true;
          break;
        }
        if (k > 0) label += "_";
        label += s;
      }
      if (drop) break;
      row_act[static_cast<std::size_t>(t)] = label;
      std::optional<double> r = field_number(sidx.reward, "reward");
      if (!r && missing == MissingPolicy::CarryForward && t > 0)
        r = std::optional<double>(row_reward[static_cast<std::size_t>(t - 1)]);
      if (!r) {
        drop = true;
        break;
      }
      row_reward[static_cast<std::size_t>(t)] = *r;
    }
    if (drop) {
      ++dropped;
      continue;
    }
    for (int t = 0; t < T; ++t) {
      cov_values[static_cast<std::size_t>(t)].push_back(row_cov[static_cast<std::size_t>(t)]);
      act_values[static_cast<std::size_t>(t)].push_back(row_act[static_cast<std::size_t>(t)]);
      reward_values[static_cast<std::size_t>(t)].push_back(row_reward[static_cast<std::size_t>(t)]);
    }
  }

  const int n = static_cast<int>(act_values.empty() ? 0 : act_values[0].size());
  if (n == 0) fail("csv_row", "no complete rows in the input");

  std::vector<StageData> stages(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    StageData& st = stages[static_cast<std::size_t>(t)];
    const auto p = static_cast<Eigen::Index>(schema[static_cast<std::size_t>(t)].covariates.size());
    st.covariates.resize(n, p);
    for (int i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        st.covariates(i, j) =
            cov_values[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    st.covariate_names = schema[static_cast<std::size_t>(t)].covariates;
    st.rewards.resize(n);
    for (int i = 0; i < n; ++i)
      st.rewards(i) = reward_values[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];

    // Distinct labels, sorted numerically when every label parses.
    std::vector<std::string> labels = act_values[static_cast<std::size_t>(t)];
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    bool all_numeric = true;
    for (const auto& s : labels) all_numeric = all_numeric && parse_number(s).has_value();
    if (all_numeric)
      std::sort(labels.begin(), labels.end(),
                [](const std::string& a, const std::string& b) {
                  return *parse_number(a) < *parse_number(b);
                });
    st.action_labels = labels;
    st.actions.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::string& s = act_values[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
      const auto it = std::find(labels.begin(), labels.end(), s);
      st.actions[static_cast<std::size_t>(i)] = static_cast<int>(it - labels.begin());
    }
  }
  if (report) {
    report->rows_read = n + dropped;
    report->rows_dropped = dropped;
  }
  return TrajectoryDataset(std::move(stages));
}

TrajectoryDataset read_trajectories_csv_file(const std::string& path,
                                             const std::vector<StageColumns>& schema_or_empty,
                                             MissingPolicy missing, CsvReadReport* report) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open '" + path + "'");
  std::vector<StageColumns> schema = schema_or_empty;
  if (schema.empty()) schema = schema_from_header(read_csv_header(path));
  return read_trajectories_csv(in, schema, missing, report);
}

namespace {

// "0_1" style labels on every action let a stage round-trip as two columns.
bool paired_labels(const std::vector<std::string>& labels) {
  for (const std::string& s : labels) {
    const std::size_t us = s.find('_');
    if (us == std::string::npos || us == 0 || us + 1 >= s.size()) return false;
    if (s.find('_', us + 1) != std::string::npos) return false;
    if (!parse_number(s.substr(0, us)) || !parse_number(s.substr(us + 1))) return false;
  }
  return true;
}

}  // namespace

void write_trajectories_csv(std::ostream& out, const TrajectoryDataset& data) {
  const int T = data.stage_count();
  std::vector<bool> paired(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t)
    paired[static_cast<std::size_t>(t - 1)] = paired_labels(data.stage(t).action_labels);

  bool first = true;
  auto emit = [&](const std::string& s) {
    if (!first) out << ',';
    out << s;
    first = false;
  };
  for (int t = 1; t <= T; ++t) {
    for (const std::string& name : data.stage(t).covariate_names) emit(name);
    if (paired[static_cast<std::size_t>(t - 1)]) {
      emit("a" + std::to_string(t) + "_1");
      emit("a" + std::to_string(t) + "_2");
    } else {
      emit("a" + std::to_string(t));
    }
    emit("y" + std::to_string(t));
  }
  out << '\n';

  for (int i = 0; i < data.n(); ++i) {
    first = true;
    for (int t = 1; t <= T; ++t) {
      const StageData& st = data.stage(t);
      for (Eigen::Index j = 0; j < st.covariates.cols(); ++j)
        emit(format_double(st.covariates(i, j)));
      const std::string& label =
          st.action_labels[static_cast<std::size_t>(st.actions[static_cast<std::size_t>(i)])];
      if (paired[static_cast<std::size_t>(t - 1)]) {
        const std::size_t us = label.find('_');
        emit(label.substr(0, us));
        emit(label.substr(us + 1));
      } else {
        emit(label);
      }
      emit(format_double(st.rewards(i)));
    }
    out << '\n';
  }
}

void write_trajectories_csv_file(const std::string& path, const TrajectoryDataset& data) {
  std::ofstream out(path);
  if (!out) fail("io", "cannot open '" + path + "' for writing");
  write_trajectories_csv(out, data);
  if (!out) fail("io", "failed writing '" + path + "'");
}

}  // namespace dtr
