#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace scoredens {

enum class CheckStatus { pass, fail, skip };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
};

struct SelftestOptions {
  /// Replaces the second learning rate of the schedule under test, e.g. 1.5
  /// to confirm that a corrupt schedule is caught.
  std::optional<double> inject_beta;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  std::size_t count(CheckStatus s) const;
  bool ok() const { return count(CheckStatus::fail) == 0; }
};

/// Closed-form checks over every module; light Monte Carlo only.
SelftestReport run_selftest(const SelftestOptions& options = {});

}  // namespace scoredens
