#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symkit/linsolve.hpp"

namespace symkit {

enum class Command { Lie, Detsys, Check, Algebra, Qp, Noether, Bench };
enum class OutputFormat { Text, Json };
enum class QpMode { Lv, Darboux, Integrals, Symmetries };

namespace exit_code {
constexpr int kOk = 0;
constexpr int kParseError = 1;
constexpr int kNotOrthonomic = 2;
constexpr int kIncomplete = 3;
constexpr int kBudget = 4;
}  // namespace exit_code

struct JobSpec {
  Command command = Command::Lie;
  std::vector<std::string> inputs;  // bench accepts files and directories
  SolverParams params = default_solver_params();
  OutputFormat format = OutputFormat::Text;
  int degree = 1;                   // qp, noether
  bool count_only = false;          // detsys
  std::vector<std::string> generators;  // check, algebra: extra "gen" expressions
  QpMode qp_mode = QpMode::Lv;
  bool mixed_logs = false;          // qp integrals: ln-polynomial ansatz
  bool timings = false;             // bench: include wall times in JSON
};

struct RunResult {
  int status = exit_code::kOk;
  std::string output;
  std::string error;
};

/// Never throws; failures are mapped to exit codes with a message in `error`.
RunResult run(const JobSpec& job);

struct BenchRow {
  std::string name;
  bool ok = false;  // parsed and reached the solver
  std::string error;
  std::size_t equations = 0;
  bool complete = false;
  std::size_t generators = 0;
  std::size_t families = 0;
  double seconds = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  /// Wall times are left out unless asked for, so reports compare byte for byte.
  nlohmann::json to_json(bool timings = false) const;
  std::string to_text() const;
};

/// Rows ordered by file name; directories contribute their *.deq files.
BenchReport bench(const std::vector<std::string>& inputs, const SolverParams& p = default_solver_params());

}  // namespace symkit
