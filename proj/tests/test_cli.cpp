#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "rssiloc/commands.hpp"
#include "rssiloc/config.hpp"
#include "rssiloc/errors.hpp"
#include "test_util.hpp"

using namespace rssiloc;

namespace {

int run(std::initializer_list<const char*> args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::vector<const char*> argv{"rssiloc"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code =
      run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  Config cfg;
  CHECK(cfg.num("gamma") == doctest::Approx(2.2));
  CHECK(cfg.integer("n_bins") == 30);
  CHECK(cfg.boolean("filter_rssi"));
  CHECK(cfg.int_list("lstm_units") == std::vector<int>{64, 128});
  cfg.set("gamma", "3.5");
  CHECK(cfg.num("gamma") == doctest::Approx(3.5));
  CHECK_THROWS_AS(cfg.set("not_a_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.num("trajectory"), ConfigError);
}

TEST_CASE("config file parsing") {
  testutil::TempDir tmp("cli_config");
  const auto file = tmp.path() / "run.conf";
  {
    std::ofstream os(file);
    os << "# comment line\n\n";
    os << "sigma_db = 6\n";
    os << "trajectory=random-walk\n";
    os << "lstm_units = 8, 16\n";
  }
  Config cfg;
  cfg.load_file(file);
  CHECK(cfg.num("sigma_db") == doctest::Approx(6.0));
  CHECK(cfg.str("trajectory") == "random-walk");
  CHECK(cfg.int_list("lstm_units") == std::vector<int>{8, 16});

  const auto bad = tmp.path() / "bad.conf";
  {
    std::ofstream os(bad);
    os << "mystery_key = 1\n";
  }
  Config cfg2;
  CHECK_THROWS_AS(cfg2.load_file(bad), ConfigError);
  Config cfg3;
  CHECK_THROWS_AS(cfg3.load_file(tmp.path() / "missing.conf"), IoError);
}

TEST_CASE("help exits 0 and documents the keys each command reads") {
  std::string out;
  CHECK(run({"--help"}, &out) == 0);
  CHECK(out.find("simulate") != std::string::npos);
  CHECK(out.find("compare") != std::string::npos);

  CHECK(run({"simulate", "--help"}, &out) == 0);
  for (const auto& spec : Config::schema()) {
    if (spec.cmds & kCmdSimulate)
      CHECK(out.find("--" + std::string(spec.key)) != std::string::npos);
  }
  CHECK(out.find("--median_window") == std::string::npos);  // preprocess-only

  CHECK(run({"preprocess", "--help"}, &out) == 0);
  CHECK(out.find("--median_window") != std::string::npos);
  CHECK(run({"train", "--help"}, &out) == 0);
  CHECK(out.find("--batch_size") != std::string::npos);
  CHECK(run({"eval", "--help"}, &out) == 0);
  CHECK(out.find("--checkpoint") != std::string::npos);
  CHECK(run({"compare", "--help"}, &out) == 0);
  CHECK(out.find("--iterations") != std::string::npos);
}

TEST_CASE("CLI error exit codes") {
  std::string err;
  CHECK(run({"transmogrify"}, nullptr, &err) == 2);
  CHECK(err.find("unknown command") != std::string::npos);
  CHECK(run({"simulate", "--no_such_key", "1"}, nullptr, &err) == 2);
  CHECK(run({"simulate", "--duration_s"}, nullptr, &err) == 2);  // no value
  CHECK(run({"simulate", "--config", "nowhere.conf"}, nullptr, &err) == 3);
  CHECK(run({"train", "--data_dir", "does/not/exist"}, nullptr, &err) == 3);
  CHECK(run({"simulate", "--loss_prob", "1.5", "--out_dir",
             "test_tmp/cli_badloss"},
            nullptr, &err) == 2);
  CHECK(run({}) == 2);  // bare invocation prints usage and fails
}

TEST_CASE("simulate prints the per-node record count") {
  testutil::TempDir tmp("cli_simulate");
  std::string out;
  const std::string out_dir = (tmp.path() / "out").string();
  const int code = run({"simulate", "--duration_s", "60", "--out_dir",
                        out_dir.c_str()},
                       &out);
  CHECK(code == 0);
  CHECK(out.find("1200 records/node") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/records.csv"));
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/truth.csv"));
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/meta.txt"));
}

TEST_CASE("simulate writes one directory per environment with distinct offsets") {
  testutil::TempDir tmp("cli_envs");
  const std::string out_dir = (tmp.path() / "out").string();
  const int code = run({"simulate", "--duration_s", "10", "--environments",
                        "4", "--out_dir", out_dir.c_str()});
  REQUIRE(code == 0);
  std::set<std::string> offsets;
  for (int env = 0; env < 4; ++env) {
    const auto dir = tmp.path() / "out" / ("env" + std::to_string(env));
    REQUIRE(std::filesystem::exists(dir / "meta.txt"));
    const std::string meta = testutil::read_file_bytes(dir / "meta.txt");
    const auto pos = meta.find("multipath_offset_node0 = ");
    REQUIRE(pos != std::string::npos);
    offsets.insert(meta.substr(pos, meta.find('\n', pos) - pos));
  }
  CHECK(offsets.size() == 4);  // every environment drew its own topology
}

TEST_CASE("full pipeline end-to-end on a small run") {
  testutil::TempDir tmp("cli_e2e");
  const std::string out_dir = (tmp.path() / "out").string();
  const std::string env0 = (tmp.path() / "out/env0").string();
  REQUIRE(run({"simulate", "--duration_s", "150", "--out_dir",
               out_dir.c_str()}) == 0);

  std::string out;
  REQUIRE(run({"preprocess", "--data_dir", env0.c_str()}, &out) == 0);
  CHECK(out.find("windows train/val/test") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/tensors.bin"));
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/preprocess.meta"));

  // eval before train reports a missing checkpoint
  std::string err;
  CHECK(run({"eval", "--data_dir", env0.c_str()}, nullptr, &err) == 3);
  CHECK(err.find("checkpoint") != std::string::npos);

  REQUIRE(run({"train", "--data_dir", env0.c_str(), "--arch", "fcn",
               "--iterations", "40", "--batch_size", "32", "--eval_every",
               "20", "--lr", "1e-3"},
              &out) == 0);
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/fcn/checkpoint.bin"));
  const std::string trace =
      testutil::read_file_bytes(tmp.path() / "out/env0/fcn/trace.csv");
  CHECK(trace.find("iteration,train_loss,val_accuracy") != std::string::npos);
  CHECK(trace.find("\n20,") != std::string::npos);
  CHECK(trace.find("\n40,") != std::string::npos);

  REQUIRE(run({"eval", "--data_dir", env0.c_str(), "--arch", "fcn"}, &out) ==
          0);
  CHECK(out.find("confidence") != std::string::npos);
  CHECK(out.find("baseline") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/fcn/metrics.csv"));
  CHECK(std::filesystem::exists(tmp.path() / "out/env0/fcn/confusion.csv"));
}

TEST_CASE("simulate and preprocess reruns are byte-identical") {
  testutil::TempDir tmp("cli_determinism");
  const std::string dir_a = (tmp.path() / "a").string();
  const std::string dir_b = (tmp.path() / "b").string();
  for (const auto& dir : {dir_a, dir_b}) {
    REQUIRE(run({"simulate", "--duration_s", "120", "--loss_prob", "0.05",
                 "--seed", "99", "--out_dir", dir.c_str()}) == 0);
    const std::string env = dir + "/env0";
    REQUIRE(run({"preprocess", "--data_dir", env.c_str()}) == 0);
  }
  for (const char* name :
       {"env0/records.csv", "env0/truth.csv", "env0/meta.txt",
        "env0/tensors.bin", "env0/preprocess.meta"})
    CHECK(testutil::read_file_bytes(tmp.path() / "a" / name) ==
          testutil::read_file_bytes(tmp.path() / "b" / name));
}

TEST_CASE("train reruns produce byte-identical traces and checkpoints") {
  testutil::TempDir tmp("cli_train_det");
  const std::string out_dir = (tmp.path() / "out").string();
  const std::string env0 = (tmp.path() / "out/env0").string();
  REQUIRE(run({"simulate", "--duration_s", "90", "--out_dir",
               out_dir.c_str()}) == 0);
  REQUIRE(run({"preprocess", "--data_dir", env0.c_str()}) == 0);
  std::string first_trace, first_ck;
  for (int round = 0; round < 2; ++round) {
    REQUIRE(run({"train", "--data_dir", env0.c_str(), "--arch", "lstm",
                 "--iterations", "10", "--batch_size", "16", "--eval_every",
                 "5", "--lstm_units", "8,12", "--seed", "5"}) == 0);
    const std::string trace =
        testutil::read_file_bytes(tmp.path() / "out/env0/lstm/trace.csv");
    const std::string ck = testutil::read_file_bytes(
        tmp.path() / "out/env0/lstm/checkpoint.bin");
    if (round == 0) {
      first_trace = trace;
      first_ck = ck;
    } else {
      CHECK(trace == first_trace);
      CHECK(ck == first_ck);
    }
  }
}
