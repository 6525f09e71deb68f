#pragma once

#include <string>
#include <vector>

namespace indexlab {

enum class CheckStatus { pass, fail, skip };
const char* to_string(CheckStatus s);

struct CheckResult {
  int id = 0;
  std::string anchor;  // short name of the identity being checked
  CheckStatus status = CheckStatus::fail;
  double measured = 0;
  std::string target;  // e.g. "== 0", "<= 1e-8", ">= 0.45"
  double tolerance = 0;
  double time_limit = 0;  // seconds, 0 for none
  double runtime = 0;
  std::string detail;
};

struct VerifyOptions {
  unsigned seed = 0;  // 0 keeps the built-in per-check seeds
  int threads = 1;
};

struct VerificationReport {
  std::vector<CheckResult> checks;  // ordered by id
  bool all_pass() const;
};

int check_count();
const char* check_anchor(int id);
// ids empty runs every check; results come back in id order whatever the thread count
VerificationReport run_verification(const std::vector<int>& ids = {}, const VerifyOptions& opt = {});
std::string format_line(const CheckResult& r);

}  // namespace indexlab
