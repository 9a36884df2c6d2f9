#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bivcov/bivcov.hpp"
#include "bivcov/field/csv.hpp"

namespace fs = std::filesystem;
using namespace bivcov;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("bivcov_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = work_dir() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
};

// Runs the tool with stdout captured to a file and stderr discarded.
Run run(const std::string& args) {
  const auto out = work_dir() / "stdout.txt";
  const std::string cmd = std::string("\"") + BIVCOV_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const char* kEqual =
    "kind = stable\nsigma1 = 1\nsigma2 = 1\nrho = 0.9\n"
    "alpha11 = 0.5\nalpha22 = 0.5\nalpha12 = 0.5\ns11 = 1\ns22 = 1\ns12 = 1\n";

const char* kFig1 =
    "kind = stable\nsigma1 = 1\nsigma2 = 1\nrho = 0.1\n"
    "alpha11 = 0.2\nalpha22 = 0.5\nalpha12 = 0.6\ns11 = 2\ns22 = 3\ns12 = 1\n";

}  // namespace

TEST(Validate, ExitCodes) {
  auto r = run("validate " + q(write_file("equal.txt", kEqual)) + " --dim 3");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rho_bound = 1\n"), std::string::npos) << r.out;

  r = run("validate " +
          q(write_file("below.txt", "kind = stable\nsigma1 = 1\nsigma2 = 1\nrho = 0.1\nalpha11 = 0.5\nalpha22 = 0.9\n"
                                    "alpha12 = 0.6\ns11 = 1\ns22 = 1\ns12 = 1\n")));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("decidability = necessarily-zero"), std::string::npos);

  r = run("validate " + q(write_file("sph.txt", "kind = spherical\nsigma1 = 1\nsigma2 = 1\nrho = 0.3\n"
                                                "s11 = 1\ns22 = 1\ns12 = 2\n")) +
          " --dim 3");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("witness_frequency = "), std::string::npos);

  const std::string matern = "kind = matern\nsigma1 = 1\nsigma2 = 1\nnu1 = 0.5\nnu2 = 1.5\nnu12 = 1\n"
                             "s11 = 2\ns22 = 2\ns12 = 2\n";
  EXPECT_EQ(run("validate " + q(write_file("m1.txt", matern + "rho = 0.5\n"))).code, 0);
  EXPECT_EQ(run("validate " + q(write_file("m2.txt", matern + "rho = 0.95\n"))).code, 2);
}

TEST(Validate, OperationalErrors) {
  EXPECT_EQ(run("validate " + q(write_file("bad.txt", "kind = stable\nsigma1 1\n"))).code, 3);
  EXPECT_EQ(run("validate " + q(work_dir() / "no_such_file.txt")).code, 4);
  EXPECT_EQ(run("validate " + q(write_file("eq2.txt", kEqual)) + " --dim 4").code, 3);
  EXPECT_EQ(run("no-such-command").code, 3);
}

TEST(Curve, MatchesLibraryAndRejectsRho) {
  const auto model = write_file("fig1.txt", kFig1);
  EXPECT_EQ(run("curve " + q(model) + " --sweep rho=0:1:3").code, 3);

  const auto r = run("curve " + q(model) + " --sweep s12=0.5:4:8");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 4), "s12,");
  auto p = parse_model(kFig1).stable();
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string a, b;
    std::getline(cells, a, ',');
    std::getline(cells, b, ',');
    p.s12 = std::stod(a);
    EXPECT_NEAR(std::stod(b), max_rho_stable(p, Dimension(1)).rho_bound, 1e-12) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 8);
}

TEST(Spectral, WritesProfile) {
  const auto r = run("spectral " + q(write_file("sp.txt", kEqual)) + " --dim 1 --umax 5 --points 10");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 14), "u,f11,f12,f22\n");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 11);
}

TEST(Pipeline, SimulateFitKrigeDeterministic) {
  const auto model = write_file("sim.txt", kEqual);
  const auto a = work_dir() / "a.csv", b = work_dir() / "b.csv";
  ASSERT_EQ(run("simulate " + q(model) + " --grid 0:6:6 --dim 2 --seed 42 --out " + q(a)).code, 0);
  ASSERT_EQ(run("simulate " + q(model) + " --grid 0:6:6 --dim 2 --seed 42 --out " + q(b)).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
  const auto c = work_dir() / "c.csv";
  ASSERT_EQ(run("simulate " + q(model) + " --grid 0:6:6 --dim 2 --seed 43 --out " + q(c)).code, 0);
  EXPECT_NE(slurp(a), slurp(c));

  const auto f1 = work_dir() / "f1.txt", f2 = work_dir() / "f2.txt";
  const std::string fit = "fit " + q(a) + " --kind stable --starts 2 --evals 150 --seed 5 --out ";
  ASSERT_EQ(run(fit + q(f1)).code, 0);
  ASSERT_EQ(run(fit + q(f2)).code, 0);
  EXPECT_EQ(slurp(f1), slurp(f2));
  const auto fitted = parse_model(slurp(f1));
  EXPECT_EQ(fitted.kind, ModelKind::Stable);
  EXPECT_TRUE(fitted.means().has_value());

  // Kriging at an observed site reproduces the observation.
  std::ifstream data(a);
  const auto sample = read_sample(data);
  std::ostringstream targets;
  targets << "x,y\n" << format_double(sample.points.coords[7][0]) << ',' << format_double(sample.points.coords[7][1]) << '\n';
  const auto t = write_file("targets.csv", targets.str());
  const int comp = sample.component[7] + 1;
  const auto r = run("krige " + q(model) + " --data " + q(a) + " --targets " + q(t) + " --component " +
                     std::to_string(comp));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream rows(r.out);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  std::vector<std::string> cells;
  std::istringstream split(row);
  for (std::string cell; std::getline(split, cell, ',');) cells.push_back(cell);
  std::vector<std::string> names;
  std::istringstream hsplit(header);
  for (std::string cell; std::getline(hsplit, cell, ',');) names.push_back(cell);
  const auto col = std::find(names.begin(), names.end(), "prediction") - names.begin();
  ASSERT_LT(col, static_cast<long>(cells.size())) << header;
  EXPECT_NEAR(std::stod(cells[static_cast<std::size_t>(col)]), sample.value[7], 1e-6);
}
