#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ppr/cli.hpp"
#include "ppr/geom.hpp"

using namespace ppr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  int code = cli_main(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("ppr_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// slopes (2, 0.75, 0, ..., 0) for the 20 scenario-1 covariates
std::string slopes() {
  std::string s = "2,0.75";
  for (int j = 2; j < 20; ++j) s += ",0";
  return s;
}

// small covariate stack and a pattern on it, shared by the tests below
const fs::path& workspace() {
  static const fs::path dir = [] {
    auto d = scratch("ws");
    REQUIRE(run({"make-covariates", "--scenario", "1", "--seed", "3", "--out", (d / "covs").string()}).code == 0);
    auto r = run({"simulate", "--model", "poisson", "--beta", slopes(), "--mu", "500", "--covariates",
                  (d / "covs").string(), "--seed", "4", "--out", (d / "pat.csv").string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("argument parsing") {
  auto c = parse_args({"fit", "--pattern", "p.csv", "--covariates", "c", "--out", "f.json", "--penalty",
                       "scad", "--no-se"});
  CHECK(c.verb == "fit");
  CHECK(c.get("pattern") == "p.csv");
  CHECK(c.get("penalty") == "scad");
  CHECK(c.has("no-se"));
  CHECK_FALSE(c.has("nd"));
}

TEST_CASE("usage errors map to exit codes") {
  auto none = run({});
  CHECK(none.code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"fit", "--pattern", "p", "--covariates", "c", "--out", "o", "--colour", "red"}).code == 2);

  auto bad = run({"fit", "--pattern", "p", "--covariates", "c", "--out", "o", "--method", "bogus"});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("--method") != std::string::npos);
  CHECK(run({"fit", "--covariates", "c", "--out", "o"}).code == 3);
  CHECK(run({"simulate", "--out", "o"}).code == 3);

  auto num = run({"fit", "--pattern", "p", "--covariates", "c", "--out", "o", "--nd", "lots"});
  CHECK(num.code == 4);
  CHECK(num.err.find("--nd") != std::string::npos);
  CHECK(run({"kest", "--pattern", "p", "--r", "1,x"}).code == 4);

  auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("runtime failures exit with 1") {
  auto d = scratch("missing");
  auto r = run({"fit", "--pattern", (d / "nope.csv").string(), "--covariates", (d / "nodir").string(), "--out",
                (d / "f.json").string()});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("fit writes json that reads back exactly") {
  const auto& ws = workspace();
  auto out = ws / "fit.json";
  auto r = run({"fit", "--pattern", (ws / "pat.csv").string(), "--covariates", (ws / "covs").string(),
                "--penalty", "lasso", "--n-lambda", "20", "--out", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto f = read_fit(out);
  CHECK(f.lambda_grid.size() == 20);
  CHECK(f.coef_path.rows() == 20);
  CHECK(f.coef_path.cols() == 21);
  REQUIRE(f.se);
  CHECK(f.se->size() == 21);

  auto again = ws / "fit2.json";
  emit_fit(f, again);
  CHECK(slurp(out) == slurp(again));
  auto g = read_fit(again);
  CHECK(g.beta_hat == f.beta_hat);
  for (std::size_t j = 1; j < f.beta_hat.size(); ++j) {
    if (f.beta_hat[j] == 0.0) CHECK(std::isnan((*g.se)[j]));
  }
}

TEST_CASE("json edge cases") {
  auto d = scratch("json");
  FitResult r;
  r.lambda_grid = {0.0};
  r.beta_hat = {-1.5};
  r.coef_path = Eigen::MatrixXd::Constant(1, 1, -1.5);
  r.wqbic = {12.0};
  auto p = d / "empty.json";
  emit_fit(r, p);
  auto text = slurp(p);
  CHECK(text.find("\"support\": []") != std::string::npos);
  CHECK(text.find("\"se\"") == std::string::npos);
  auto back = read_fit(p);
  CHECK(back.support.empty());
  CHECK_FALSE(back.se);
  CHECK(back.beta_hat == r.beta_hat);

  std::ofstream(d / "broken.json") << "{ not json";
  CHECK_THROWS_AS(read_fit(d / "broken.json"), IoError);
}

TEST_CASE("path, kest and simulate outputs") {
  const auto& ws = workspace();
  auto path_csv = ws / "path.csv";
  auto r = run({"path", "--pattern", (ws / "pat.csv").string(), "--covariates", (ws / "covs").string(),
                "--penalty", "al", "--n-lambda", "10", "--out", path_csv.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::ifstream in(path_csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("lambda,wqbic,beta0,beta1", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 10);
  CHECK(run({"path", "--pattern", (ws / "pat.csv").string(), "--covariates", (ws / "covs").string(), "--out",
             path_csv.string()})
            .code == 3);

  auto k = run({"kest", "--pattern", (ws / "pat.csv").string(), "--covariates", (ws / "covs").string(), "--r",
                "10,20", "--rho", "fitted"});
  REQUIRE_MESSAGE(k.code == 0, k.err);
  CHECK(k.out.rfind("r,khat,pi_r2\n10,", 0) == 0);

  auto thomas = run({"simulate", "--kappa", "5e-4", "--omega", "20", "--beta", slopes(), "--mu", "400",
                     "--covariates", (ws / "covs").string(), "--seed", "9", "--out", (ws / "th.csv").string()});
  REQUIRE_MESSAGE(thomas.code == 0, thomas.err);
  auto w = read_covariate_dir(ws / "covs")[0].window();
  CHECK(read_pattern_csv(ws / "th.csv", w).size() > 0);
  CHECK(run({"simulate", "--beta", "-8", "--window", "0,100,0,100", "--out", (ws / "th.csv").string()}).code == 3);
  CHECK(run({"simulate", "--model", "poisson", "--beta", "-5", "--window", "0,100", "--out",
             (ws / "th.csv").string()})
            .code == 3);
}

TEST_CASE("experiment verb") {
  auto d = scratch("exp");
  std::ofstream(d / "exp.cfg") << "mu = 300\nn_reps = 2\nn_lambda = 10\npenalties = lasso, oracle\n";
  auto r = run({"experiment", "--config", (d / "exp.cfg").string(), "--out", (d / "res").string(), "--threads",
                "1"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"selection.csv", "prediction.csv", "runs.csv"}) CHECK(fs::exists(d / "res" / f));
  std::ofstream(d / "bad.cfg") << "wibble = 3\n";
  CHECK(run({"experiment", "--config", (d / "bad.cfg").string(), "--out", (d / "res").string()}).code != 0);
}

TEST_CASE("the binary is deterministic") {
  const auto& ws = workspace();
  const std::string bin = PPR_BINARY;
  auto once = [&](const std::string& tag) {
    auto out = ws / ("det_" + tag + ".json");
    std::string cmd = "\"" + bin + "\" fit --pattern \"" + (ws / "pat.csv").string() + "\" --covariates \"" +
                      (ws / "covs").string() + "\" --method wlogit --penalty scad --n-lambda 15 --seed 7 --out \"" +
                      out.string() + "\" > /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    return slurp(out);
  };
  auto a = once("a");
  auto b = once("b");
  CHECK_FALSE(a.empty());
  CHECK(a == b);
  std::string cmd = "\"" + bin + "\" fit --method bogus > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 3);
}
