#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symkit/expr.hpp"
#include "symkit/prolong.hpp"

namespace symkit {

struct SolverParams {
  int n1 = 5;
  int n2 = 5;
  int n3 = 8;
  int budget = 2000;  // reduction steps per completion call
};

/// Reads the completion budget from SYMKIT_BUDGET when set.
SolverParams default_solver_params();

/// Linear homogeneous system in unknown functions of `vars`.
struct LinearSystem {
  std::vector<std::string> vars;
  std::vector<std::string> dep_vars;  // subset of vars that are dependent variables
  std::vector<std::string> params;
  std::vector<std::pair<std::string, std::vector<std::string>>> unknowns;
  std::vector<Expr> eqs;
};

LinearSystem to_linear_system(const DeterminingSystem& ds);

struct SolutionState {
  std::vector<std::string> vars;
  std::vector<std::string> dep_vars;
  std::vector<std::string> params;
  std::vector<std::string> original;               // unknowns of the input system
  std::map<std::string, Expr> found;               // original unknown -> solution
  std::map<std::string, std::vector<std::string>> live;  // unknowns still free, with arguments
  std::vector<Expr> eqs;                           // equations still to be solved
  std::vector<Expr> remaining;                     // unsolved, coupling several functions
  std::vector<Expr> constraints;                   // unsolved, each in a single function
  int next_function = 1;
  int next_constant = 1;
  bool budget_exceeded = false;
  std::vector<std::string> trace;                  // step log

  bool complete() const { return remaining.empty(); }
  bool involves_unknown(const Expr& e) const;
  bool is_unknown_atom(const Atom& a) const;
  /// The variable `name` as an expression atom.
  Expr var(const std::string& name) const;
};

SolutionState make_state(const LinearSystem& sys);

/// Full staged heuristic.
SolutionState solve_linear(const LinearSystem& sys, const SolverParams& p = {});

/// Substitution f := value produced by a single solving step.
struct Substitution {
  std::string name;
  Expr value;
};

// Individual steps, each a no-op returning nullopt when not applicable.
std::optional<Substitution> solve_null_derivative(SolutionState& st, const Expr& eq);
std::optional<Substitution> solve_algebraic(SolutionState& st, const Expr& eq, bool original_only, bool strict);
std::optional<Substitution> integrate_single_ode(SolutionState& st, const Expr& eq);
std::optional<std::vector<Expr>> li_split(const SolutionState& st, const Expr& eq);
std::optional<std::vector<Substitution>> separate_mixed_args(SolutionState& st, const Expr& eq);
/// For c1*L(f1) + ... + cn*L(fn) = 0 with rational c_k and one operator L,
/// replaces f1 by (G - c2*f2 - ...)/c1 with G fresh, leaving L(G) = 0.
std::optional<Substitution> combine_unknowns(SolutionState& st, const Expr& eq);

struct CompletionResult {
  std::vector<Expr> eqs;
  bool changed = false;
  bool budget_exceeded = false;
};
/// Kolchin-Ritt style completion of a linear system: autoreduction and
/// cross-derivative integrability conditions.
CompletionResult involutive_reduce(const SolutionState& st, const std::vector<Expr>& eqs, int budget);

/// Applies a substitution to every equation and recorded solution.
void apply_substitution(SolutionState& st, const Substitution& s);

/// Antiderivative with respect to `var` for polynomial/Laurent terms times
/// exponentials of linear functions; nullopt if unsupported.
std::optional<Expr> integrate(const Expr& e, const Expr& var);

struct GeneratorFamily {
  Generator gen;                     // linear in the listed functions
  std::vector<std::string> functions;
  std::vector<Expr> constraints;
};

struct SymmetryResult {
  JetSpace space;
  std::vector<Generator> basis;
  std::vector<GeneratorFamily> families;
  std::vector<Expr> remaining;
  bool complete = false;
  bool budget_exceeded = false;
  /// Declarations able to parse every expression in the result.
  Declarations decl;
};

SymmetryResult assemble_generators(const SolutionState& st, const DeterminingSystem& ds);

/// Values of the given original unknowns as linear combinations of free
/// constants; arbitrary functions are split off as families.
struct LinearAssembly {
  std::vector<std::map<std::string, Expr>> basis;
  std::vector<std::pair<std::map<std::string, Expr>, std::vector<std::string>>> families;
  std::map<std::string, std::vector<std::string>> function_args;
  std::vector<std::vector<Expr>> family_constraints;
};
LinearAssembly assemble_linear(const SolutionState& st, const std::vector<std::string>& targets);

/// Convenience: determining system, solve, assemble.
SymmetryResult lie_symmetries(const DESystem& sys, const SolverParams& p = {});

}  // namespace symkit
