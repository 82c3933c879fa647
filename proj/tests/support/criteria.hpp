#pragma once

// Acceptance checks. Each returns a verdict plus a one-line summary of what
// was measured; the acceptance runner prints one line per check.

#include <filesystem>
#include <string>
#include <vector>

#include "xrpipe/std_model.hpp"
#include "support.hpp"

namespace xrpipe::testing {

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

struct StdFixture {
  std::vector<ToyStream> streams;
  std::vector<ArrivalSchedule> schedules;
  StdConfig config;
  Json expected;
};
StdFixture load_std_fixture(const std::filesystem::path& path);
std::string expected_trace_text(const StdFixture& f);

/// Per-step poc each component should present in the desync scenario with no
/// grouping: rate r decodes r pictures per step, the renderer asks for the
/// picture due at s * tick, and the buffer keeps the last `capacity`.
std::vector<std::vector<std::int64_t>> desync_oracle(const std::vector<std::uint32_t>& rates, std::uint32_t steps,
                                                     std::int64_t frames_per_step, std::int64_t capacity,
                                                     std::int64_t frames);

CriterionResult check_desync_and_fix();
CriterionResult check_group_skew_bound(int scenarios = 200);
CriterionResult check_formatting_equivalence(int stacks = 50, int appends = 50);
CriterionResult check_capability_anecdote();
CriterionResult check_std_conformance();
CriterionResult check_circular_buffer(int sequences = 10000, int stress_writes = 100000);
CriterionResult check_scene_corpus();
CriterionResult check_update_atomicity(int transactions = 500);
CriterionResult check_cli_determinism();

}  // namespace xrpipe::testing
