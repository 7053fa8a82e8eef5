#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "permsym/json_io.hpp"

using namespace permsym;

namespace {

const std::string kCli = PERMSYM_CLI_PATH;
const std::string kTmp = PERMSYM_TMP_DIR;

std::string path_of(const std::string& name) { return kTmp + "/" + name; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  Json j;
  in >> j;
  return j;
}

int run(const std::string& args) {
  std::string cmd = kCli + " " + args + " > " + path_of("cli_stdout.txt") +
                    " 2> " + path_of("cli_stderr.txt");
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("canon subcommand: one-hot matrix and the constant matrix") {
  write_file(path_of("onehot.json"),
             R"({"schema_version":"1","mode":"separate",)"
             R"("array":[[1,0],[0,0]]})");
  CHECK(run("canon --input " + path_of("onehot.json") + " --out " +
            path_of("canon_out.json")) == 0);
  Json out = read_json(path_of("canon_out.json"));
  CHECK(out.at("schema_version") == "1");
  CHECK(out.at("canon") == Json::parse("[[0.0,0.0],[0.0,1.0]]"));
  CHECK(out.at("witness") == Json::parse("[[1,0],[1,0]]"));
  CHECK(out.at("orbit_size") == 4);

  write_file(path_of("const.json"),
             R"({"schema_version":"1","mode":"separate",)"
             R"("array":[[2,2],[2,2]]})");
  CHECK(run("canon --input " + path_of("const.json") + " --out " +
            path_of("canon_const.json")) == 0);
  Json c = read_json(path_of("canon_const.json"));
  CHECK(c.at("canon") == Json::parse("[[2.0,2.0],[2.0,2.0]]"));
  CHECK(c.at("witness") == Json::parse("[[0,1],[0,1]]"));
}

TEST_CASE("canon subcommand: exit-code contract") {
  // feasibility: a 9x9 joint request exits 3
  std::ostringstream big;
  big << R"({"schema_version":"1","mode":"joint","array":[)";
  for (int i = 0; i < 9; ++i) {
    big << (i ? "," : "") << "[";
    for (int j = 0; j < 9; ++j) big << (j ? ",0" : "0");
    big << "]";
  }
  big << "]}";
  write_file(path_of("big.json"), big.str());
  CHECK(run("canon --input " + path_of("big.json")) == 3);

  // parse errors and schema violations exit 2
  write_file(path_of("broken.json"), "{not json");
  CHECK(run("canon --input " + path_of("broken.json")) == 2);
  write_file(path_of("unknown.json"),
             R"({"schema_version":"1","mode":"seq","array":[1,2],"zzz":1})");
  CHECK(run("canon --input " + path_of("unknown.json")) == 2);
  write_file(path_of("badmode.json"),
             R"({"schema_version":"1","mode":"spiral","array":[1,2]})");
  CHECK(run("canon --input " + path_of("badmode.json")) == 2);
  CHECK(run("canon --input " + path_of("does_not_exist.json")) == 2);
}

TEST_CASE("sample subcommand draws from the orbit law") {
  write_file(path_of("rep.json"),
             R"({"schema_version":"1","mode":"seq","array":[1,1,2]})");
  CHECK(run("sample --input " + path_of("rep.json") +
            " --seed 7 --n 600 --out " + path_of("sample_out.json")) == 0);
  Json out = read_json(path_of("sample_out.json"));
  CHECK(out.at("counts").size() == 3);
  std::size_t total = 0;
  for (const auto& c : out.at("counts")) {
    std::size_t n = c.at("count").get<std::size_t>();
    CHECK(n > 120);  // roughly a third of 600 each
    total += n;
  }
  CHECK(total == 600);
  CHECK(out.at("samples").size() == 600);

  // the seed is mandatory and its absence is an input error
  CHECK(run("sample --input " + path_of("rep.json")) == 2);
}

TEST_CASE("check subcommand: pass, fail, and empty suites") {
  write_file(path_of("check_pass.json"),
             R"({"schema_version":"1","seed":21,"suites":["semigroup"]})");
  CHECK(run("check --config " + path_of("check_pass.json") + " --out " +
            path_of("check_report.json")) == 0);
  Json report = read_json(path_of("check_report.json"));
  CHECK(report.at("all_passed") == true);
  CHECK(report.at("reports").size() > 0);

  write_file(path_of("check_fail.json"),
             R"({"schema_version":"1","seed":21,)"
             R"("suites":["negative_demo"]})");
  CHECK(run("check --config " + path_of("check_fail.json") + " --out " +
            path_of("check_fail_report.json")) == 1);

  write_file(path_of("check_empty.json"),
             R"({"schema_version":"1","seed":21,"suites":[]})");
  CHECK(run("check --config " + path_of("check_empty.json") + " --out " +
            path_of("check_empty_report.json")) == 0);
  std::ifstream err(path_of("cli_stderr.txt"));
  std::stringstream buf;
  buf << err.rdbuf();
  CHECK(buf.str().find("empty suite list") != std::string::npos);

  write_file(path_of("check_noseed.json"),
             R"({"schema_version":"1","suites":["semigroup"]})");
  CHECK(run("check --config " + path_of("check_noseed.json")) == 2);
  write_file(path_of("check_badsuite.json"),
             R"({"schema_version":"1","seed":1,"suites":["nope"]})");
  CHECK(run("check --config " + path_of("check_badsuite.json")) == 2);
}

TEST_CASE("report subcommand re-reads what check wrote") {
  write_file(path_of("for_report.json"),
             R"({"schema_version":"1","seed":3,"suites":["semigroup"]})");
  REQUIRE(run("check --config " + path_of("for_report.json") + " --out " +
              path_of("roundtrip_report.json")) == 0);
  CHECK(run("report --input " + path_of("roundtrip_report.json")) == 0);
  write_file(path_of("bad_report.json"), R"({"schema_version":"1"})");
  CHECK(run("report --input " + path_of("bad_report.json")) == 2);
}

TEST_CASE("train subcommand: metrics, model file, epoch-zero behavior") {
  write_file(path_of("train_mean.json"),
             R"({"schema_version":"1","seed":4,"task":"mean","set_size":5,)"
             R"("train_examples":800,"test_examples":200,"epochs":15,)"
             R"("lr":0.02})");
  CHECK(run("train --config " + path_of("train_mean.json") + " --out " +
            path_of("train_metrics.json") + " --model-out " +
            path_of("model.json")) == 0);
  Json metrics = read_json(path_of("train_metrics.json"));
  CHECK(metrics.at("test_mse").get<double>() < 0.01);
  CHECK(metrics.at("invariance_audit").at("passed") == true);
  Json model = read_json(path_of("model.json"));
  MlpParams phi = mlp_from_json(model.at("stack")[0].at("phi"));
  CHECK(phi.input_size() == 1);

  write_file(path_of("train_zero.json"),
             R"({"schema_version":"1","seed":4,"task":"mean","set_size":5,)"
             R"("train_examples":100,"test_examples":50,"epochs":0,)"
             R"("lr":0.02})");
  CHECK(run("train --config " + path_of("train_zero.json") + " --out " +
            path_of("train_zero_metrics.json")) == 0);
  Json zero = read_json(path_of("train_zero_metrics.json"));
  CHECK(zero.at("loss_trace").size() == 0);
  CHECK(zero.at("test_mse").get<double>() > 0.01);  // untouched params

  write_file(path_of("train_bad.json"),
             R"({"schema_version":"1","seed":4,"task":"juggling"})");
  CHECK(run("train --config " + path_of("train_bad.json")) == 2);
}

TEST_CASE("identical invocations produce byte-identical reports") {
  write_file(path_of("repro.json"),
             R"({"schema_version":"1","seed":77,"suites":["semigroup"]})");
  REQUIRE(run("check --config " + path_of("repro.json") + " --out " +
              path_of("repro_a.json")) == 0);
  REQUIRE(run("check --config " + path_of("repro.json") + " --out " +
              path_of("repro_b.json")) == 0);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  CHECK(slurp(path_of("repro_a.json")) == slurp(path_of("repro_b.json")));

  // the --seed override reaches the suites
  REQUIRE(run("check --config " + path_of("repro.json") +
              " --seed 123 --out " + path_of("repro_c.json")) == 0);
  Json c = read_json(path_of("repro_c.json"));
  CHECK(c.at("seed") == 123);
}

TEST_CASE("emitted floats are lossless at 17 significant digits") {
  NoiseSource src{31, 0, 0};
  for (int trial = 0; trial < 200; ++trial) {
    auto [u, next] = noise_next(src);
    src = next;
    double value = (u - 0.5) * std::pow(10.0, (trial % 13) - 6);
    Json j = value;
    Json back = Json::parse(dump_json(j));
    CHECK(back.get<double>() == value);
  }
}

TEST_CASE("config fuzz: everything the CLI emits re-parses under the schema") {
  // generator mirror of the check-config schema
  NoiseSource src{33, 0, 0};
  auto names = suite_names();
  for (int trial = 0; trial < 1000; ++trial) {
    NoiseSource s = noise_fork(src, {static_cast<std::uint64_t>(trial)});
    Json cfg;
    cfg["schema_version"] = kSchemaVersion;
    auto [u1, s1] = noise_next(s);
    cfg["seed"] = static_cast<std::uint64_t>(u1 * 1e9);
    auto [u2, s2] = noise_next(s1);
    Json suites = Json::array();
    std::size_t count = static_cast<std::size_t>(u2 * 4);
    NoiseSource cursor = s2;
    for (std::size_t i = 0; i < count; ++i) {
      auto [u3, s3] = noise_next(cursor);
      cursor = s3;
      suites.push_back(names[static_cast<std::size_t>(u3 * names.size())]);
    }
    cfg["suites"] = suites;
    auto [u4, s4] = noise_next(cursor);
    if (u4 < 0.5) cfg["tol"] = u4 * 1e-6;
    auto [u5, s5] = noise_next(s4);
    (void)s5;
    if (u5 < 0.5) cfg["bitexact"] = u5 < 0.25;

    Json back = Json::parse(dump_json(cfg, 2));
    CHECK(back == cfg);
    reject_unknown_keys(back, {"schema_version", "seed", "suites", "tol",
                               "bitexact"},
                        "fuzz");
    check_schema_version(back, "fuzz");
  }
}
