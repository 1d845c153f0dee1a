#ifndef ERGORATE_VERIFY_HPP
#define ERGORATE_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ergorate/chain.hpp"

namespace ergorate {

struct CheckResult {
  std::string name;
  std::string subject;  // which chain/instance the check ran on
  double residual;
  double tolerance;
  bool pass;
};

struct VerifyOptions {
  std::vector<std::string> only;  // empty: run everything
  Index n = 6;                    // state count for the size-dependent checks
  bool inject_asymmetry = false;  // perturb the reversible chain of the reversibility check
  std::uint64_t seed = 7;
  Tolerances tol;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const;
  const CheckResult* first_failure() const;
};

/// Names accepted by VerifyOptions::only, in execution order.
const std::vector<std::string>& verify_check_names();

/// Property battery over the builtin chain families.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace ergorate

#endif  // ERGORATE_VERIFY_HPP
