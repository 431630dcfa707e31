#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "properties.hpp"

using namespace symkit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string corpus(const std::string& name) { return std::string(SYMKIT_CORPUS_DIR) + "/" + name; }

JobSpec job(Command c, std::vector<std::string> inputs) {
  JobSpec j;
  j.command = c;
  j.inputs = std::move(inputs);
  return j;
}

// Scratch directory removed at scope exit.
struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("symkit_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                                "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

}  // namespace

TEST(Cli, LieOnHeat) {
  auto r = run(job(Command::Lie, {corpus("heat.deq")}));
  ASSERT_EQ(r.status, exit_code::kOk) << r.error;
  EXPECT_NE(r.output.find("generators:"), std::string::npos);
  EXPECT_NE(r.output.find("  G6 = "), std::string::npos);
  EXPECT_EQ(r.output.find("  G7 = "), std::string::npos);
  EXPECT_NE(r.output.find("constraints:"), std::string::npos);
}

TEST(Cli, DetsysCount) {
  auto j = job(Command::Detsys, {corpus("heat.deq")});
  j.count_only = true;
  auto r = run(j);
  EXPECT_EQ(r.status, exit_code::kOk);
  EXPECT_EQ(r.output, "9\n");
}

TEST(Cli, CheckKleinGordon) {
  auto j = job(Command::Check, {corpus("kg.deq")});
  j.generators = {"y*D[t]+t*D[y]", "z*D[x]-x*D[z]", "p*D[t]"};
  j.format = OutputFormat::Json;
  auto r = run(j);
  ASSERT_EQ(r.status, exit_code::kOk) << r.error;
  auto doc = json::parse(r.output);
  ASSERT_EQ(doc["checks"].size(), 3u);
  EXPECT_TRUE(doc["checks"][0]["symmetry"].get<bool>());
  EXPECT_TRUE(doc["checks"][1]["symmetry"].get<bool>());
  EXPECT_FALSE(doc["checks"][2]["symmetry"].get<bool>());
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  EXPECT_EQ(run(job(Command::Lie, {tmp.write("bad.deq", "indep x; dep u(x); eq diff(u,x = u;")})).status,
            exit_code::kParseError);
  EXPECT_EQ(run(job(Command::Lie, {(tmp.path / "missing.deq").string()})).status, exit_code::kParseError);
  EXPECT_EQ(run(job(Command::Lie, {tmp.write("sq.deq", "indep x; dep u(x); eq diff(u,x)^2 = u;")})).status,
            exit_code::kNotOrthonomic);
  auto wave = run(job(Command::Lie, {corpus("wave.deq")}));
  EXPECT_EQ(wave.status, exit_code::kIncomplete);
  EXPECT_NE(wave.output.find("generators:"), std::string::npos);
}

TEST(Cli, LieOutputPassesCheck) {
  for (const auto& path : props::corpus_files()) {
    SCOPED_TRACE(path);
    auto lj = job(Command::Lie, {path});
    lj.format = OutputFormat::Json;
    auto lie = run(lj);
    ASSERT_TRUE(lie.status == exit_code::kOk || lie.status == exit_code::kIncomplete) << lie.error;
    auto doc = json::parse(lie.output);
    auto cj = job(Command::Check, {path});
    cj.format = OutputFormat::Json;
    for (const auto& g : doc["generators"]) cj.generators.push_back(g["text"].get<std::string>());
    if (cj.generators.empty()) continue;
    auto check = run(cj);
    ASSERT_EQ(check.status, exit_code::kOk) << check.error;
    auto checked = json::parse(check.output);
    for (const auto& row : checked["checks"]) EXPECT_TRUE(row["symmetry"].get<bool>()) << row["generator"]["text"];
  }
}

TEST(Cli, AlgebraOnHeat) {
  auto r = run(job(Command::Algebra, {corpus("heat.deq")}));
  ASSERT_EQ(r.status, exit_code::kOk) << r.error;
  EXPECT_NE(r.output.find("solvable: no"), std::string::npos);
}

TEST(Cli, QpAndNoether) {
  TempDir tmp;
  auto q = job(Command::Qp, {tmp.write("pp.deq", "indep t; dep x(t), y(t); eq diff(x,t) = 2*x - x*y; eq diff(y,t) = -y + x*y;")});
  q.qp_mode = QpMode::Integrals;
  auto r = run(q);
  ASSERT_EQ(r.status, exit_code::kOk) << r.error;
  EXPECT_NE(r.output.find("ln("), std::string::npos);

  auto n = job(Command::Noether, {tmp.write("s.deq", "indep t, x; dep phi(t,x); lagrangian diff(phi,x)^2/2 - diff(phi,t)^2/2;")});
  auto nr = run(n);
  ASSERT_EQ(nr.status, exit_code::kOk) << nr.error;
  EXPECT_NE(nr.output.find("[t,x]"), std::string::npos);
}

TEST(Bench, ThreeSolvedRows) {
  auto rep = bench({corpus("transport.deq"), corpus("heat.deq"), corpus("burgers.deq")});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].name, "burgers.deq");
  EXPECT_EQ(rep.rows[1].name, "heat.deq");
  EXPECT_EQ(rep.rows[2].name, "transport.deq");
  for (const auto& row : rep.rows) {
    EXPECT_TRUE(row.ok) << row.error;
    EXPECT_TRUE(row.complete) << row.name;
  }
  EXPECT_EQ(rep.rows[1].equations, 9u);
  EXPECT_EQ(rep.rows[1].generators, 6u);
  EXPECT_EQ(rep.to_json(), bench({corpus("heat.deq"), corpus("burgers.deq"), corpus("transport.deq")}).to_json());
}

TEST(Bench, EmptyCorpus) {
  TempDir tmp;
  auto r = run(job(Command::Bench, {tmp.path.string()}));
  EXPECT_EQ(r.status, exit_code::kOk);
  EXPECT_TRUE(bench({tmp.path.string()}).rows.empty());
}

TEST(Bench, MalformedFileIsIsolated) {
  TempDir tmp;
  fs::copy_file(corpus("heat.deq"), tmp.path / "heat.deq");
  fs::copy_file(corpus("transport.deq"), tmp.path / "transport.deq");
  tmp.write("broken.deq", "indep x; dep u(x); eq diff(u,x)) = 0;");
  auto rep = bench({tmp.path.string()});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].name, "broken.deq");
  EXPECT_FALSE(rep.rows[0].ok);
  EXPECT_FALSE(rep.rows[0].error.empty());
  EXPECT_TRUE(rep.rows[1].ok && rep.rows[1].complete);
  EXPECT_TRUE(rep.rows[2].ok && rep.rows[2].complete);
}
