#include "symkit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "symkit/liealg.hpp"
#include "symkit/noether.hpp"
#include "symkit/qp.hpp"
#include "symkit/serialize.hpp"

namespace symkit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& single_input(const JobSpec& job) {
  if (job.inputs.size() != 1) throw Error("expected exactly one input file");
  return job.inputs[0];
}

json expr_json(const Expr& e) { return {{"text", to_string(e)}, {"tree", to_json(e)}}; }

json generator_json(const Generator& g, const JetSpace& space) {
  json comps = json::object();
  for (const auto& v : generator_vars(space)) {
    const Expr& c = component(g, space, v);
    if (!c.is_zero()) comps[v] = expr_json(c);
  }
  return {{"text", to_string(g, space)}, {"components", comps}};
}

std::string rational_list(const Vec& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_string(v[i]);
  return s + "]";
}

std::string expr_list(const std::vector<Expr>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_string(v[i]);
  return s + "]";
}

std::string str_list(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s + "]";
}

std::vector<Generator> program_generators(const Program& prog, const std::vector<std::string>& extra) {
  JetSpace space{prog.decl.indep, prog.decl.dep};
  std::vector<Generator> gens;
  for (const auto& e : prog.generators) gens.push_back(generator_from_expr(e, space));
  for (const auto& s : extra) gens.push_back(parse_generator(s, prog.decl));
  return gens;
}

struct Output {
  std::ostringstream text;
  json doc = json::object();
  int status = exit_code::kOk;
};

void run_lie(const JobSpec& job, Output& out) {
  auto prog = parse_program(read_file(single_input(job)));
  auto res = lie_symmetries(DESystem::from_program(prog), job.params);
  const auto& sp = res.space;
  out.text << "generators:\n";
  for (std::size_t i = 0; i < res.basis.size(); ++i) out.text << "  G" << i + 1 << " = " << to_string(res.basis[i], sp) << "\n";
  out.text << "families:\n";
  for (const auto& f : res.families) out.text << "  " << to_string(f.gen, sp) << "\n";
  out.text << "constraints:\n";
  for (const auto& f : res.families) {
    for (const auto& c : f.constraints) out.text << "  " << to_string(c) << " = 0\n";
  }
  if (!res.remaining.empty()) {
    out.text << "unsolved:\n";
    for (const auto& e : res.remaining) out.text << "  " << to_string(e) << " = 0\n";
  }
  json gens = json::array(), fams = json::array(), rem = json::array();
  for (const auto& g : res.basis) gens.push_back(generator_json(g, sp));
  for (const auto& f : res.families) {
    json cons = json::array();
    for (const auto& c : f.constraints) cons.push_back(expr_json(c));
    fams.push_back({{"generator", generator_json(f.gen, sp)}, {"functions", f.functions}, {"constraints", cons}});
  }
  for (const auto& e : res.remaining) rem.push_back(expr_json(e));
  out.doc = {{"generators", gens}, {"families", fams}, {"remaining", rem}, {"complete", res.complete},
             {"budget_exceeded", res.budget_exceeded}};
  if (!res.complete) out.status = res.budget_exceeded ? exit_code::kBudget : exit_code::kIncomplete;
}

void run_detsys(const JobSpec& job, Output& out) {
  auto prog = parse_program(read_file(single_input(job)));
  auto ds = determining_system(DESystem::from_program(prog));
  if (job.count_only) {
    out.text << ds.eqs.size() << "\n";
  } else {
    for (const auto& e : ds.eqs) out.text << to_string(e) << " = 0\n";
  }
  json eqs = json::array();
  for (const auto& e : ds.eqs) eqs.push_back(expr_json(e));
  out.doc = {{"count", ds.eqs.size()}, {"unknowns", ds.unknowns}};
  if (!job.count_only) out.doc["equations"] = eqs;
}

void run_check(const JobSpec& job, Output& out) {
  auto prog = parse_program(read_file(single_input(job)));
  auto sys = DESystem::from_program(prog);
  auto gens = program_generators(prog, job.generators);
  if (gens.empty()) throw Error("no generators given (use --gen or gen statements)");
  auto form = orthonomic(sys);
  json rows = json::array();
  for (const auto& g : gens) {
    auto res = check_symmetry(sys, form, g);
    bool ok = std::all_of(res.begin(), res.end(), [](const Expr& e) { return e.is_zero(); });
    out.text << to_string(g, sys.space) << ": " << (ok ? "symmetry" : "not a symmetry") << "\n";
    json r = json::array();
    for (const auto& e : res) {
      out.text << "  residual " << to_string(e) << "\n";
      r.push_back(expr_json(e));
    }
    rows.push_back({{"generator", generator_json(g, sys.space)}, {"residuals", r}, {"symmetry", ok}});
  }
  out.doc = {{"checks", rows}};
}

void run_algebra(const JobSpec& job, Output& out) {
  auto prog = parse_program(read_file(single_input(job)));
  JetSpace space{prog.decl.indep, prog.decl.dep};
  auto gens = program_generators(prog, job.generators);
  if (gens.empty()) {
    auto res = lie_symmetries(DESystem::from_program(prog), job.params);
    gens = res.basis;
    if (!res.complete) out.status = res.budget_exceeded ? exit_code::kBudget : exit_code::kIncomplete;
  }
  AlgebraBasis basis{space, independent_subset(gens)};
  out.text << "basis:\n";
  json jb = json::array();
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    out.text << "  G" << i + 1 << " = " << to_string(basis.gens[i], space) << "\n";
    jb.push_back(generator_json(basis.gens[i], space));
  }
  auto table = commutation_table(basis);
  out.text << "commutators:\n" << to_string(table, space);
  json jt = json::array();
  for (const auto& row : table.entries) {
    json r = json::array();
    for (const auto& e : row) r.push_back(entry_string(e, space));
    jt.push_back(r);
  }
  out.doc = {{"basis", jb}, {"table", jt}, {"closed", table.closed}};
  if (!table.closed) {
    out.text << "closed: no\n";
    return;
  }
  auto c = structure_constants(basis);
  json jc = json::array();
  out.text << "structure constants:\n";
  for (std::size_t a = 0; a < c.dim(); ++a) {
    for (std::size_t b = a + 1; b < c.dim(); ++b) {
      for (std::size_t k = 0; k < c.dim(); ++k) {
        if (c(a, b, k) == 0) continue;
        out.text << "  C(" << a + 1 << "," << b + 1 << "," << k + 1 << ") = " << to_string(c(a, b, k)) << "\n";
        jc.push_back({a + 1, b + 1, k + 1, to_string(c(a, b, k))});
      }
    }
  }
  auto derived = derived_subalgebra(basis);
  bool solvable = is_solvable(basis);
  out.text << "derived dimension: " << derived.dim() << "\n";
  out.text << "solvable: " << (solvable ? "yes" : "no") << "\n";
  out.doc["structure_constants"] = jc;
  out.doc["derived_dimension"] = derived.dim();
  out.doc["solvable"] = solvable;
}

QPSystem load_qp(const std::string& path) {
  std::string text = read_file(path);
  if (fs::path(path).extension() == ".json") {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), e.byte);
    }
    return qp_from_json(j);
  }
  return qp_from_program(parse_program(text));
}

void run_qp(const JobSpec& job, Output& out) {
  QPSystem sys = load_qp(single_input(job));
  LVForm lv = to_lv(sys);
  switch (job.qp_mode) {
    case QpMode::Lv: {
      out.text << "variables:\n";
      json vars = json::array();
      for (std::size_t i = 0; i < lv.m(); ++i) {
        out.text << "  " << lv.y[i] << " = " << to_string(lv.y_in_x(i)) << "\n";
        vars.push_back({{"name", lv.y[i]}, {"value", to_string(lv.y_in_x(i))}, {"exponents", rational_list(lv.B[i])}});
      }
      out.text << "M:\n";
      json M = json::array();
      for (const auto& row : lv.M) {
        out.text << "  " << expr_list(row) << "\n";
        json r = json::array();
        for (const auto& e : row) r.push_back(to_string(e));
        M.push_back(r);
      }
      out.text << "equations:\n";
      for (std::size_t i = 0; i < lv.m(); ++i) out.text << "  " << lv.y[i] << "' = " << to_string(lv.lv_rhs(i)) << "\n";
      out.doc = {{"system", to_json(sys)}, {"variables", vars}, {"M", M}, {"padded", lv.padded},
                 {"constant", lv.constant ? json(lv.y[*lv.constant]) : json(nullptr)}, {"invertible", lv.back.has_value()}};
      break;
    }
    case QpMode::Darboux: {
      json rows = json::array();
      for (const auto& s : darboux(lv, job.degree)) {
        Expr lam = lv.to_x(s.lambda_y);
        out.text << "f = " << to_string(s.f_x) << "  lambda = " << to_string(lam) << "  (degree " << s.degree << ")\n";
        rows.push_back({{"f", expr_json(s.f_x)}, {"f_y", to_string(s.f_y)}, {"lambda", expr_json(lam)}, {"degree", s.degree}});
      }
      out.doc = {{"semi_invariants", rows}};
      break;
    }
    case QpMode::Integrals: {
      auto ints = qp_first_integrals(sys, job.degree);
      auto logs = log_integrals(sys, job.degree, job.mixed_logs);
      ints.insert(ints.end(), logs.begin(), logs.end());
      json rows = json::array();
      for (const auto& I : ints) {
        out.text << kind_name(I.kind) << ": " << to_string(I.value()) << "\n";
        rows.push_back({{"kind", kind_name(I.kind)}, {"value", expr_json(I.value())}});
      }
      out.doc = {{"integrals", rows}};
      break;
    }
    case QpMode::Symmetries: {
      json rows = json::array();
      for (const auto& s : qp_symmetries(sys, job.degree)) {
        Expr lam = lv.linear(s.lambda);
        if (lv.constant) {
          Rules one;
          one.emplace(dep_atom(lv.y[*lv.constant]), Expr(1));
          lam = substitute(lam, one);
        }
        out.text << "T = " << to_string(s.T, lv.space()) << "  lambda = " << to_string(lam) << "\n";
        json r = {{"T", generator_json(s.T, lv.space())}, {"lambda", expr_json(lam)}};
        if (s.G) {
          out.text << "  G = " << to_string(*s.G, lv.space()) << "\n";
          r["G"] = generator_json(*s.G, lv.space());
        }
        if (s.G_x) {
          out.text << "  G(x) = " << to_string(*s.G_x, sys.space()) << "\n";
          r["G_x"] = generator_json(*s.G_x, sys.space());
        }
        rows.push_back(r);
      }
      out.doc = {{"symmetries", rows}};
      break;
    }
  }
}

void run_noether(const JobSpec& job, Output& out) {
  auto lag = lagrangian_from_program(parse_program(read_file(single_input(job))));
  json rows = json::array();
  for (const auto& s : noether_solve(lag, job.degree, job.params)) {
    out.text << to_string(s.gen, lag.space) << ": " << to_string(s.current) << "\n";
    json comps = json::array();
    for (const auto& c : s.current.components) comps.push_back(expr_json(c));
    json gauge = json::array();
    for (const auto& f : s.f) gauge.push_back(expr_json(f));
    rows.push_back({{"generator", generator_json(s.gen, lag.space)}, {"gauge", gauge}, {"current", comps}});
  }
  out.text << "order: " << str_list(lag.space.indep) << "\n";
  out.doc = {{"currents", rows}, {"order", lag.space.indep}};
}

}  // namespace

RunResult run(const JobSpec& job) {
  RunResult r;
  Output out;
  try {
    switch (job.command) {
      case Command::Lie: run_lie(job, out); break;
      case Command::Detsys: run_detsys(job, out); break;
      case Command::Check: run_check(job, out); break;
      case Command::Algebra: run_algebra(job, out); break;
      case Command::Qp: run_qp(job, out); break;
      case Command::Noether: run_noether(job, out); break;
      case Command::Bench: {
        auto report = bench(job.inputs, job.params);
        out.text << report.to_text();
        out.doc = report.to_json(job.timings);
        break;
      }
    }
  } catch (const NotOrthonomic& e) {
    r.status = exit_code::kNotOrthonomic;
    r.error = e.what();
    return r;
  } catch (const std::exception& e) {
    r.status = exit_code::kParseError;
    r.error = e.what();
    return r;
  }
  r.status = out.status;
  r.output = job.format == OutputFormat::Json ? out.doc.dump(2) + "\n" : out.text.str();
  if (r.status == exit_code::kIncomplete) r.error = "solve incomplete; partial result emitted";
  if (r.status == exit_code::kBudget) r.error = "completion budget exceeded; partial result emitted";
  return r;
}

json BenchReport::to_json(bool timings) const {
  json rows = json::array();
  for (const auto& r : this->rows) {
    json j = {{"name", r.name}, {"ok", r.ok}};
    if (r.ok) {
      j["equations"] = r.equations;
      j["complete"] = r.complete;
      j["generators"] = r.generators;
      j["families"] = r.families;
    } else {
      j["error"] = r.error;
    }
    if (timings) j["seconds"] = r.seconds;
    rows.push_back(j);
  }
  return {{"systems", rows}};
}

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os << "system                 eqs  status      gens  families  seconds\n";
  for (const auto& r : rows) {
    char line[160];
    if (r.ok) {
      std::snprintf(line, sizeof line, "%-22s %4zu  %-10s %5zu  %8zu  %7.3f\n", r.name.c_str(), r.equations,
                    r.complete ? "solved" : "incomplete", r.generators, r.families, r.seconds);
    } else {
      std::snprintf(line, sizeof line, "%-22s  error: %s\n", r.name.c_str(), r.error.c_str());
    }
    os << line;
  }
  return os.str();
}

BenchReport bench(const std::vector<std::string>& inputs, const SolverParams& p) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    fs::path path(in);
    if (fs::is_directory(path)) {
      for (const auto& e : fs::directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".deq") files.push_back(e.path());
      }
    } else {
      files.push_back(path);
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  BenchReport report;
  for (const auto& f : files) {
    BenchRow row;
    row.name = f.filename().string();
    auto start = std::chrono::steady_clock::now();
    try {
      auto sys = DESystem::from_program(parse_program(read_file(f.string())));
      row.equations = determining_system(sys).eqs.size();
      auto res = lie_symmetries(sys, p);
      row.ok = true;
      row.complete = res.complete;
      row.generators = res.basis.size();
      row.families = res.families.size();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace symkit
