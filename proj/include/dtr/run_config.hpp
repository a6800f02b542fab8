#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtr/csv.hpp"
#include "dtr/pipeline.hpp"

namespace dtr {

/// Flat "key = value" configuration for the fit command. Dotted keys select
/// components (krr.*, list.*, stage{t}.*); '#' starts a comment. Unknown keys
/// are errors.
struct RunConfig {
  FitConfig fit;
  std::vector<StageColumns> schema;  // empty: derive from the CSV header
  MissingPolicy missing = MissingPolicy::Drop;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace dtr
