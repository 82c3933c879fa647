// Runs every acceptance check and prints one line per criterion. Exit status
// is non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "criteria.hpp"

using xrpipe::testing::CriterionResult;

int main() {
  struct Entry {
    int number;
    const char* name;
    std::function<CriterionResult()> check;
  };
  using namespace xrpipe::testing;
  const std::vector<Entry> entries{
      {1, "desync reproduced and fixed by grouping", [] { return check_desync_and_fix(); }},
      {2, "group skew stays within tolerance", [] { return check_group_skew_bound(); }},
      {3, "input formatting decode equivalence", [] { return check_formatting_equivalence(); }},
      {4, "aggregate capability accounting", [] { return check_capability_anecdote(); }},
      {5, "STD traces and CDM rules", [] { return check_std_conformance(); }},
      {6, "circular buffer model and concurrency", [] { return check_circular_buffer(); }},
      {7, "scene corpus validation", [] { return check_scene_corpus(); }},
      {8, "atomic updates preserve references", [] { return check_update_atomicity(); }},
      {9, "CLI determinism", [] { return check_cli_determinism(); }},
  };

  int failed = 0;
  for (const Entry& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = e.check();
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = std::string("exception: ") + ex.what();
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    failed += !r.pass;
    std::printf("criterion %d %s: %s %s (%lld ms)\n", e.number, e.name, r.pass ? "PASS" : "FAIL", r.detail.c_str(),
                static_cast<long long>(ms));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(entries.size()) - failed, entries.size());
  return failed == 0 ? 0 : 1;
}
