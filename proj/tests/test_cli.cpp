// Process-level checks of the installed command surface; the binary path
// arrives via the FLOWDDI_CLI environment variable set by CTest.
#include <doctest.h>

#include <cstdlib>
#include <string>

#include "test_util.hpp"

namespace {

std::string cli_path() {
  const char* env = std::getenv("FLOWDDI_CLI");
  REQUIRE_MESSAGE(env != nullptr, "FLOWDDI_CLI must point at the flowddi binary");
  return env;
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = cli_path() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = testutil::read_file(log);
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fixture generation, staged pipeline, and exit codes") {
  testutil::TempDir dir("cli");
  const auto data = dir.path() / "data";
  const auto log = dir.path() / "log.txt";

  SUBCASE("missing input path exits 2 and names the path") {
    auto r = run_cli("pretrain --config " + (dir.path() / "nope.ini").string(), log);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("nope.ini") != std::string::npos);
  }

  SUBCASE("full staged run") {
    auto made = run_cli("make-fixture --out " + data.string() +
                            " --drugs 14 --types 3 --edges 90 --clusters 3 --seed 6",
                        log);
    REQUIRE(made.exit_code == 0);

    // Shrink the template budgets so the test stays fast.
    std::string cfg = testutil::read_file(data / "config.ini");
    auto patch = [&cfg](const std::string& from, const std::string& to) {
      for (auto pos = cfg.find(from); pos != std::string::npos; pos = cfg.find(from))
        cfg.replace(pos, from.size(), to);
    };
    patch("epochs = 600", "epochs = 60");
    patch("epochs = 300", "epochs = 40");
    patch("epochs = 3000", "epochs = 150");
    patch("latent_dim = 16", "latent_dim = 6");
    patch("hidden_dim = 32", "hidden_dim = 12");
    patch("knn_k = 20", "knn_k = 6");
    testutil::write_file(data / "config.ini", cfg);
    const std::string config_arg = " --config " + (data / "config.ini").string();

    // Stage 2 without stage 1 is a missing prerequisite: exit 3.
    auto premature = run_cli("train-gfn" + config_arg, log);
    CHECK(premature.exit_code == 3);

    REQUIRE(run_cli("pretrain" + config_arg, log).exit_code == 0);
    REQUIRE(run_cli("train-gfn" + config_arg, log).exit_code == 0);
    auto full = run_cli("augment-retrain" + config_arg, log);
    REQUIRE(full.exit_code == 0);
    CHECK(full.output.find("baseline") != std::string::npos);
    CHECK(full.output.find("diversity") != std::string::npos);

    auto eval = run_cli("evaluate --model final" + config_arg, log);
    CHECK(eval.exit_code == 0);

    // Re-running stage 1 with the same seed reproduces the checkpoint bytes.
    const auto ckpt = data / "run" / "vgae_pretrain.bin";
    const std::string before = testutil::read_file(ckpt);
    REQUIRE(run_cli("pretrain" + config_arg, log).exit_code == 0);
    CHECK(testutil::read_file(ckpt) == before);

    // A different seed produces a different checkpoint.
    REQUIRE(run_cli("pretrain --seed 8" + config_arg, log).exit_code == 0);
    CHECK(testutil::read_file(ckpt) != before);
  }

  SUBCASE("infeasible fixture parameters exit 2") {
    auto r = run_cli("make-fixture --out " + data.string() + " --drugs 4 --types 2" +
                         " --edges 9999",
                     log);
    CHECK(r.exit_code == 2);
  }

  SUBCASE("unknown subcommand exits 2") {
    auto r = run_cli("frobnicate", log);
    CHECK(r.exit_code == 2);
  }
}

}  // TEST_SUITE
