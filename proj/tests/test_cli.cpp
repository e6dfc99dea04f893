#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "spinid/io.hpp"
#include "support.hpp"

using namespace spinid;
using io::json;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("spinid_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& content) const { io::write_file_atomic(path(name), content); }
  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2)); }

  // Runs the CLI; returns its exit status and keeps stderr in `err_`.
  int run(const std::string& args) {
    const std::string cmd = std::string(SPINID_CLI_PATH) + " " + args + " 2> " + path("stderr.txt").string() +
                            " > " + path("stdout.txt").string();
    const int status = std::system(cmd.c_str());
    err_ = io::read_file(path("stderr.txt"));
    out_ = io::read_file(path("stdout.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string err_;
  std::string out_;
};

json rabi_model() {
  return {{"n", 1},
          {"gamma", {1.0}},
          {"couplings", json::array()},
          {"initial_state", {{"strings", {{{"sites", {{1, "z"}}}, {"coeff", 1.0}}}}}}};
}

json two_spin_model() {
  return {{"n", 2},
          {"gamma", {1.0, 2.0}},
          {"couplings", {{{"k", 1}, {"l", 2}, {"J", 1.0}}}},
          {"initial_state",
           {{"strings",
             {{{"sites", {{1, "z"}}}, {"coeff", 0.05}}, {{"sites", {{1, "z"}, {2, "z"}}}, {"coeff", 0.05}}}}}}};
}

}  // namespace

TEST_F(Cli, SimulateRabi) {
  write_json("model.json", rabi_model());
  write("sched.json", R"({"segments": [{"duration": 2.0, "ux": 0.8}]})");
  ASSERT_EQ(run("simulate --model " + path("model.json").string() + " --schedule " + path("sched.json").string() +
                " --out " + path("trace.csv").string()),
            0)
      << err_;
  const Trace tr = io::parse_trace_csv(io::read_file(path("trace.csv")));
  ASSERT_EQ(tr.size(), 201u);
  for (std::size_t j = 0; j < tr.size(); ++j) EXPECT_NEAR(tr.mz[j], 0.5 * std::cos(0.8 * tr.t[j]), 1e-10);
}

TEST_F(Cli, SimulateMaximallyMixedIsZero) {
  json model = two_spin_model();
  model["initial_state"]["strings"] = json::array();
  write_json("model.json", model);
  write("sched.json", R"({"segments": [{"duration": 0.5, "ux": 1.0, "uz": -0.5}]})");
  ASSERT_EQ(run("simulate --model " + path("model.json").string() + " --schedule " + path("sched.json").string() +
                " --grid 0.05"),
            0);
  const Trace tr = io::parse_trace_csv(out_);
  ASSERT_EQ(tr.size(), 11u);
  for (std::size_t j = 0; j < tr.size(); ++j) {
    EXPECT_EQ(tr.mx[j], 0.0);
    EXPECT_EQ(tr.my[j], 0.0);
    EXPECT_EQ(tr.mz[j], 0.0);
  }
}

TEST_F(Cli, SimulateErrors) {
  write("sched.json", R"({"segments": [{"duration": 1.0}]})");
  const std::string out = " --out " + path("trace.csv").string();
  EXPECT_EQ(run("simulate --model " + path("missing.json").string() + " --schedule " + path("sched.json").string() +
                out),
            1);
  EXPECT_NE(err_.find("missing.json"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("trace.csv")));

  json bad = two_spin_model();
  bad["initial_state"]["strings"][0]["coeff"] = 5.0;
  write_json("bad.json", bad);
  EXPECT_EQ(run("simulate --model " + path("bad.json").string() + " --schedule " + path("sched.json").string() + out),
            2);
  EXPECT_FALSE(fs::exists(path("trace.csv")));

  json stateless = two_spin_model();
  stateless.erase("initial_state");
  write_json("stateless.json", stateless);
  EXPECT_EQ(run("simulate --model " + path("stateless.json").string() + " --schedule " +
                path("sched.json").string() + out),
            2);

  write_json("model.json", two_spin_model());
  EXPECT_EQ(run("simulate --model " + path("model.json").string() + " --schedule " + path("sched.json").string() +
                " --grid 0" + out),
            1);
  EXPECT_EQ(run("simulate --model " + path("model.json").string()), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_FALSE(fs::exists(path("trace.csv")));
}

TEST_F(Cli, Analyze) {
  write_json("model.json", two_spin_model());
  ASSERT_EQ(run("analyze --model " + path("model.json").string() + " --out " + path("report.json").string()), 0);
  const json r = io::read_json(path("report.json"));
  EXPECT_TRUE(r["controllable"].get<bool>());
  EXPECT_TRUE(r["observable"].get<bool>());
  EXPECT_EQ(r["observability_dimension"].get<int>(), 15);

  json off = two_spin_model();
  off["couplings"] = json::array();
  write_json("off.json", off);
  ASSERT_EQ(run("analyze --model " + path("off.json").string()), 0);
  EXPECT_FALSE(json::parse(out_)["controllable"].get<bool>());

  write_json("six.json", json{{"n", 6}, {"gamma", {1, 2, 3, 4, 5, 6}}});
  EXPECT_EQ(run("analyze --model " + path("six.json").string() + " --out " + path("six_report.json").string()), 3);
  EXPECT_NE(err_.find("cap"), std::string::npos);
  EXPECT_NE(err_.find('5'), std::string::npos);
  EXPECT_FALSE(fs::exists(path("six_report.json")));
}

TEST_F(Cli, PartnerAndEquiv) {
  write_json("pair.json", two_spin_model());
  ASSERT_EQ(run("partner --pair " + path("pair.json").string() + " --out " + path("partner.json").string()), 0);
  EXPECT_NE(err_.find("psd_ok=true"), std::string::npos);
  const ModelStatePair partner = io::load_pair(path("partner.json"));
  EXPECT_EQ(partner.net.coupling(1, 2), -1.0);
  const Operator expected =
      DensityMatrix::from_pauli(2, {{PauliString::single(2, 1, Axis::z), 0.05},
                                    {PauliString::pair(2, 1, Axis::z, 2, Axis::z), -0.05}})
          .matrix();
  EXPECT_LT(test::max_abs(partner.rho0.matrix() - expected), 1e-15);

  ASSERT_EQ(run("equiv --pair-a " + path("pair.json").string() + " --pair-b " + path("partner.json").string() +
                " --trials 5 --seed 3"),
            0)
      << err_;
  const json v = json::parse(out_);
  EXPECT_TRUE(v["equivalent"].get<bool>());
  EXPECT_EQ(v["trials"].get<int>(), 5);
  EXPECT_LT(v["max_deviation"].get<double>(), 1e-9);

  json flipped = two_spin_model();
  flipped["couplings"][0]["J"] = 0.5;
  write_json("flipped.json", flipped);
  EXPECT_EQ(run("equiv --pair-a " + path("pair.json").string() + " --pair-b " + path("flipped.json").string() +
                " --out " + path("verdict.json").string()),
            10);
  EXPECT_FALSE(io::read_json(path("verdict.json"))["equivalent"].get<bool>());
  EXPECT_EQ(run("equiv --pair-a " + path("pair.json").string() + " --pair-b " + path("nope.json").string()), 1);
}

TEST_F(Cli, IdentifyRoundTripFromSimulatedTraces) {
  const SpinNetwork truth({1.0, 2.0}, {{1, 2, 1.0}});
  write_json("model.json", two_spin_model());
  const auto schedules = design_schedules(2, 4, 1);
  fs::create_directories(path("data"));
  for (std::size_t i = 0; i < schedules.size(); ++i) {
    const std::string s = path("data/schedule_" + std::to_string(i) + ".json").string();
    io::write_file_atomic(s, io::schedule_to_json(schedules[i]).dump(2));
    ASSERT_EQ(run("simulate --model " + path("model.json").string() + " --schedule " + s + " --grid 0.02 --out " +
                  path("data/trace_" + std::to_string(i) + ".csv").string()),
              0)
        << err_;
  }
  write_json("data/state.json", two_spin_model()["initial_state"]);
  json guess;
  guess["gamma"] = {1.15, 1.8};
  guess["couplings"] = json::array({json{{"k", 1}, {"l", 2}, {"J", 1.2}}});
  json hyp = {{"n", 2}, {"grid", 0.02}, {"known_state", true}, {"state_file", "state.json"}};
  hyp["edges"] = json::array({json::array({1, 2})});
  hyp["initial_guess"] = guess;
  write_json("data/hypothesis.json", hyp);
  ASSERT_EQ(run("identify --data-dir " + path("data").string() + " --out " + path("fit.json").string()), 0) << err_;
  const json fit = io::read_json(path("fit.json"));
  EXPECT_EQ(fit["branch"], "J");
  EXPECT_NEAR(fit["couplings"][0]["J"].get<double>(), 1.0, 1e-3);
  EXPECT_NEAR(fit["gamma"][0].get<double>(), 1.0, 1e-3);
  EXPECT_NEAR(fit["gamma"][1].get<double>(), 2.0, 2e-3);

  ASSERT_EQ(run("identify --data-dir " + path("data").string() + " --out " + path("fit2.json").string()), 0);
  EXPECT_EQ(io::read_file(path("fit.json")), io::read_file(path("fit2.json")));
}

TEST_F(Cli, IdentifyUnknownStateReportsBranches) {
  std::mt19937_64 rng(5);
  const SpinNetwork truth({1.0, 2.0}, {{1, 2, 1.0}});
  const Dataset data =
      simulate_dataset(truth, test::near_mixed_state(2, 0.2, rng), design_schedules(2, 3, 2), 0.05, {{1, 2}});
  io::save_dataset(path("data"), data, nullptr);
  ASSERT_EQ(run("identify --data-dir " + path("data").string() + " --seed 1"), 0) << err_;
  const json out = json::parse(out_);
  ASSERT_EQ(out["branches"].size(), 2u);
  EXPECT_EQ(out["branches"][0]["branch"], "J");
  EXPECT_EQ(out["branches"][1]["branch"], "-J");
  EXPECT_NE(err_.find("branch -J"), std::string::npos);
}

TEST_F(Cli, IdentifyMalformedDatasetNamesTheFile) {
  std::mt19937_64 rng(6);
  const DensityMatrix rho0 = test::near_mixed_state(2, 0.2, rng);
  const Dataset data =
      simulate_dataset(SpinNetwork({1.0, 2.0}, {{1, 2, 1.0}}), rho0, design_schedules(2, 2, 2), 0.05, {{1, 2}});
  io::save_dataset(path("data"), data, &rho0);
  write("data/schedule_1.json", "{\"segments\": 3}");
  EXPECT_EQ(run("identify --data-dir " + path("data").string() + " --out " + path("fit.json").string()), 1);
  EXPECT_NE(err_.find("schedule_1.json"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("fit.json")));
  EXPECT_EQ(run("identify --data-dir " + path("nowhere").string()), 1);
  EXPECT_NE(err_.find("hypothesis.json"), std::string::npos);
}

TEST_F(Cli, OutputsAreByteIdentical) {
  write_json("pair.json", two_spin_model());
  write_json("sched.json", io::schedule_to_json(random_schedule(6, 2.0, 4)));
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run("simulate --model " + path("pair.json").string() + " --schedule " + path("sched.json").string() +
                  " --out " + path(std::string(name) + ".csv").string()),
              0);
    ASSERT_EQ(run("equiv --pair-a " + path("pair.json").string() + " --pair-b " + path("pair.json").string() +
                  " --trials 3 --seed 9 --out " + path(std::string(name) + ".json").string()),
              0);
  }
  EXPECT_EQ(io::read_file(path("a.csv")), io::read_file(path("b.csv")));
  EXPECT_EQ(io::read_file(path("a.json")), io::read_file(path("b.json")));
}
