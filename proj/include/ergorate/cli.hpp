#ifndef ERGORATE_CLI_HPP
#define ERGORATE_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ergorate/chain.hpp"

namespace ergorate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitInputError = 2;

struct RunConfig {
  std::string command;  // analyze | gap | decay | fit | drift | verify | simulate
  std::string family;
  std::string input;
  std::string output;  // empty: stdout
  Index state = 0;
  std::optional<double> tmax;
  std::optional<std::size_t> points;
  std::optional<std::pair<double, double>> window;
  std::optional<double> beta;
  std::optional<std::vector<double>> pi;
  std::optional<std::vector<double>> f;
  std::vector<Index> small_set{0};
  std::uint64_t seed = 1;
  std::size_t paths = 10000;
  std::vector<std::string> only;
  Index n = 6;
  std::string inject_fault;
  std::map<std::string, double> tolerance_overrides;
};

/// Outcome of one command: the text to emit and the process exit code.
struct CommandResult {
  int exit_code;
  std::string body;
};

ChainSpec<double> resolve_chain(const RunConfig& cfg, const Tolerances& tol);
Tolerances resolve_tolerances(const RunConfig& cfg);

nlohmann::json cmd_analyze(const RunConfig& cfg);
nlohmann::json cmd_gap(const RunConfig& cfg);
std::string cmd_decay(const RunConfig& cfg);
nlohmann::json cmd_fit(const RunConfig& cfg);
nlohmann::json cmd_drift(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
std::string cmd_simulate(const RunConfig& cfg);

/// Runs one command, mapping errors to the exit-code contract
/// (0 success, 1 verification failure, 2 input error).
CommandResult execute(const RunConfig& cfg);

/// Full command-line entry point; writes the result to --output (atomically)
/// or to out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ergorate::cli

#endif  // ERGORATE_CLI_HPP
