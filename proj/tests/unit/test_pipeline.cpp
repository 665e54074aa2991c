#include <atomic>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "twinforge/error.hpp"
#include "twinforge/pipeline.hpp"

using namespace twinforge;
using namespace twinforge::pipeline;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"(# tiny bank
workspace = ws
seed = 3
bank.aprbs = 8
bank.sinaprbs = 0
bank.multisine = 0
bank.schroeder = 0
bank.step = true
bank.sine = false
test_size = 6
best_k = 2
grid.nx = 4   # coarse
grid.ny = 4
grid.nz = 3
train.epochs = 20
)";

ExperimentConfig tiny(const std::string& name) {
  const auto base = fs::temp_directory_path() / ("twinforge-test-" + name);
  fs::remove_all(base);
  return parse_config(kTiny, base);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing") {
  const auto c = tiny("cfg");
  CHECK(c.seed == 3);
  CHECK(c.bank.aprbs == 8);
  CHECK_FALSE(c.bank.sine);
  CHECK(c.grid.nx == 4);
  CHECK(c.train.epochs == 20);
  CHECK(c.workspace.filename() == "ws");
  CHECK(c.workspace.is_absolute());

  const auto d = parse_config("constants.h_amb_side = 40\ntrain.schedule = cosine\n");
  CHECK(d.constants.h_amb_side == 40.0);
  CHECK(d.train.schedule == rom::LrSchedule::Cosine);
  CHECK(d.bank.aprbs == 50);

  CHECK_THROWS_AS(parse_config("nonsense = 1\n"), SchemaError);
  CHECK_THROWS_AS(parse_config("seed\n"), SchemaError);
  CHECK_THROWS_AS(parse_config("seed = abc\n"), SchemaError);
  CHECK_THROWS_AS(parse_config("train.schedule = linear\n"), SchemaError);
  CHECK_THROWS_AS(parse_config("constants.bogus = 1\n"), SchemaError);
  CHECK_THROWS_AS(parse_config("bank.aprbs = 10\n"), DomainError);
  CHECK_THROWS_AS(parse_config("test_size = 3\n"), DomainError);
  CHECK_THROWS_AS(parse_config("grid.ny = 3\n"), DomainError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("parallel runner runs every task and keeps errors") {
  std::atomic<int> ran{0};
  const auto errors = run_parallel(20, 3, [&](std::size_t i) {
    ++ran;
    if (i % 7 == 0) throw DomainError("task " + std::to_string(i));
  });
  CHECK(ran == 20);
  CHECK(errors[0].value() == "task 0");
  CHECK(errors[7].has_value());
  CHECK_FALSE(errors[1].has_value());
}

TEST_CASE("bank synthesis") {
  auto c = tiny("bank");
  const auto bank = synthesize_bank(c);
  std::vector<std::string> ids;
  for (const auto& s : bank) ids.push_back(s.id);
  CHECK(ids == std::vector<std::string>{"ap001", "ap002", "ap003", "ap004", "ap005", "ap006", "ap007", "ap008",
                                        "step"});
  const auto again = synthesize_bank(c);
  CHECK(again[3].values == bank[3].values);
  c.seed = 4;
  CHECK(synthesize_bank(c)[3].values != bank[3].values);
  CHECK(rom_id_for("ap001") == "rom-ap001");
  CHECK(rom_kind(signals::SignalKind::SchroederMultisine) == "multisine");
  CHECK(rom_kind(signals::SignalKind::SinAprbs) == "sinaprbs");
}

TEST_CASE("content-addressed simulation cache") {
  const auto c = tiny("cache");
  const Workspace ws(c);
  cmd_synth(ws);
  const auto first = cmd_simulate(ws);
  CHECK(first.computed == 9);
  CHECK(first.cache_hits == 0);
  CHECK(first.failures.empty());
  const auto second = cmd_simulate(ws);
  CHECK(second.computed == 0);
  CHECK(second.cache_hits == 9);

  const auto sig = ws.signal("ap002");
  const auto r = ws.result(sig);
  CHECK(r.times.size() == sig.size());
  CHECK(ws.result_path(sig).filename().string().rfind("ap002.", 0) == 0);

  // The key covers the values, the grid and the constants.
  auto other = sig;
  other.values[10] += 1e-9;
  CHECK(ws.cache_key(other) != ws.cache_key(sig));
  auto c2 = c;
  c2.grid.nx = 6;
  CHECK(Workspace(c2).cache_key(sig) != ws.cache_key(sig));
  auto c3 = c;
  c3.constants.D_cb = 4e-10;
  CHECK(Workspace(c3).cache_key(sig) != ws.cache_key(sig));
  auto c4 = c;
  c4.seed = 99;
  c4.train.epochs = 5;
  CHECK(Workspace(c4).cache_key(sig) == ws.cache_key(sig));

  // Changed constants miss the cache.
  const Workspace changed(c3);
  CHECK_THROWS_AS(changed.result(sig), IoError);
  CHECK(cmd_simulate(changed, {"ap002"}).computed == 1);

  fs::remove_all(c.workspace.parent_path());
}

TEST_CASE("result files round trip") {
  core::SimResult r;
  r.signal_id = "x";
  for (int k = 0; k < 5; ++k) {
    r.times.push_back(5.0 * k);
    r.T_oven.push_back(400.0 + 0.1 * k);
    r.T_A.push_back(280.0 + 1.0 / 3.0 * k);
    r.T_B.push_back(290.0 + std::exp(0.1 * k));
  }
  const auto path = fs::temp_directory_path() / "twinforge-test-result.csv";
  write_result(path, r);
  const auto back = read_result(path);
  CHECK(back.times == r.times);
  CHECK(back.T_oven == r.T_oven);
  CHECK(back.T_A == r.T_A);
  CHECK(back.T_B == r.T_B);
  fs::remove(path);
}

}  // TEST_SUITE
