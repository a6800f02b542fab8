#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dtr/dataset.hpp"

namespace dtr {

/// Wide trajectory layout: one row per subject with per-stage column groups
///   s{t} or s{t}_{name} ...,  a{t} (or a{t}_1,a{t}_2 for paired actions),  y{t}.
/// Fields are comma-separated without quoting; empty or "NA" fields are
/// missing values.
struct StageColumns {
  std::vector<std::string> covariates;  // column names
  std::vector<std::string> action;      // one name, or two for paired actions
  std::string reward;
};

/// Derives the per-stage column groups from a canonical header; throws
/// Error("csv_schema") when the header does not follow the layout.
std::vector<StageColumns> schema_from_header(const std::vector<std::string>& header);

enum class MissingPolicy { Drop, CarryForward };

struct CsvReadReport {
  int rows_read = 0;
  int rows_dropped = 0;
};

/// Reads a trajectory CSV. With CarryForward, a missing covariate or reward
/// is filled from the nearest earlier stage column with the same name suffix;
/// rows still incomplete afterwards (and rows with missing actions) are
/// dropped. Action labels are the distinct strings per stage, sorted
/// numerically when possible.
TrajectoryDataset read_trajectories_csv(std::istream& in, const std::vector<StageColumns>& schema,
                                        MissingPolicy missing, CsvReadReport* report = nullptr);
TrajectoryDataset read_trajectories_csv_file(const std::string& path,
                                             const std::vector<StageColumns>& schema_or_empty,
                                             MissingPolicy missing,
                                             CsvReadReport* report = nullptr);

/// Header line only (used to derive a schema before the full read).
std::vector<std::string> read_csv_header(const std::string& path);

/// Writes a dataset in the same layout. Stages whose action labels all look
/// like "i_j" integer pairs are written as two action columns.
void write_trajectories_csv(std::ostream& out, const TrajectoryDataset& data);
void write_trajectories_csv_file(const std::string& path, const TrajectoryDataset& data);

}  // namespace dtr
