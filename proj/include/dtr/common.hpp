#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dtr {

/// Error with a short machine-readable code ("bad_config", "positivity", ...)
/// and a human-readable message. The CLI prints these as "ERROR <code>: <msg>".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

/// splitmix64 step; used to derive independent seed streams from a root seed
/// so that fold assignments, tuner starts and replication streams are
/// reproducible and do not depend on thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic substream seed: mix the root with a stream tag and index.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t s = root;
  (void)splitmix64(s);
  s ^= 0x51b5c19ad9a7fe05ULL * (tag + 1);
  (void)splitmix64(s);
  s ^= 0xd6e8feb86659fd93ULL * (index + 1);
  return splitmix64(s);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work items are
/// handed out by atomic counter; callers must write results into
/// pre-allocated per-index slots so the outcome is schedule independent.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Shortest decimal string that round-trips the value (to_chars).
std::string format_double(double v);

/// Order-insensitive compensated accumulator for benchmark aggregation.
class KahanSum {
 public:
  void add(double v) {
    double y = v - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace dtr
