#include "twinforge/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "twinforge/csv.hpp"
#include "twinforge/error.hpp"
#include "twinforge/kpis.hpp"
#include "twinforge/rng.hpp"

namespace twinforge::pipeline {

namespace fs = std::filesystem;
using csv::format_double;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw SchemaError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw SchemaError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string padded(const std::string& prefix, int i) {
  std::ostringstream out;
  out << prefix << std::setw(3) << std::setfill('0') << i;
  return out.str();
}

std::vector<std::string> measure_header() {
  return {"RMSE", "MAPE", "MAX", "MEDIAN", "IQR", "R2"};
}

void append_measures(std::vector<std::string>& row, const eval::MeasureSet& m) {
  for (int i = 0; i < 6; ++i) row.push_back(format_double(eval::measure(m, i)));
}

eval::MeasureSet measures_from(const csv::Table& t, const std::vector<std::string>& row) {
  eval::MeasureSet m;
  m.rmse = csv::parse_double(row.at(t.column("RMSE")));
  m.mape = csv::parse_double(row.at(t.column("MAPE")));
  m.max = csv::parse_double(row.at(t.column("MAX")));
  m.median = csv::parse_double(row.at(t.column("MEDIAN")));
  m.iqr = csv::parse_double(row.at(t.column("IQR")));
  m.r2 = csv::parse_double(row.at(t.column("R2")));
  return m;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string set_name(const std::string& prefix, int size) { return prefix + std::to_string(size); }

std::mutex g_log_mutex;

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  grid.validate();
  constants.validate();
  train.validate();
  if (test_size < 6) throw DomainError("test sets need at least 6 signals (one per chi-square bin)");
  if (best_k < 1) throw DomainError("best_k must be >= 1");
  if (jobs < 1) throw DomainError("jobs must be >= 1");
  if (extrapolation_repeats < 2) throw DomainError("extrapolation needs at least two repeats");
  const int need = test_size + best_k;
  auto check = [&](const char* kind, int count) {
    if (count < 0) throw DomainError(std::string("negative signal count for ") + kind);
    if (count > 0 && count < need) {
      throw DomainError(std::string("bank kind ") + kind + " needs at least " + std::to_string(need) +
                        " signals, has " + std::to_string(count));
    }
  };
  check("aprbs", bank.aprbs);
  check("sinaprbs", bank.sinaprbs);
  check("multisine", bank.multisine + bank.schroeder);
  if (bank.multisine < 0 || bank.schroeder < 0) throw DomainError("negative signal count");
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  ExperimentConfig c;
  std::map<std::string, std::string> constant_overrides;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("config line " + std::to_string(lineno) + " is not key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    auto num = [&] { return csv::parse_double(v); };

    if (key == "workspace") c.workspace = v;
    else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, v);
    else if (key == "jobs") c.jobs = parse_int<int>(key, v);
    else if (key == "test_size") c.test_size = parse_int<int>(key, v);
    else if (key == "best_k") c.best_k = parse_int<int>(key, v);
    else if (key == "extrapolation_repeats") c.extrapolation_repeats = parse_int<int>(key, v);
    else if (key == "min_correlation_roms") c.min_correlation_roms = parse_int<int>(key, v);
    else if (key == "bank.aprbs") c.bank.aprbs = parse_int<int>(key, v);
    else if (key == "bank.sinaprbs") c.bank.sinaprbs = parse_int<int>(key, v);
    else if (key == "bank.multisine") c.bank.multisine = parse_int<int>(key, v);
    else if (key == "bank.schroeder") c.bank.schroeder = parse_int<int>(key, v);
    else if (key == "bank.step") c.bank.step = parse_bool(key, v);
    else if (key == "bank.sine") c.bank.sine = parse_bool(key, v);
    else if (key == "grid.Lx") c.grid.Lx = num();
    else if (key == "grid.Ly") c.grid.Ly = num();
    else if (key == "grid.Lz") c.grid.Lz = num();
    else if (key == "grid.nx") c.grid.nx = parse_int<int>(key, v);
    else if (key == "grid.ny") c.grid.ny = parse_int<int>(key, v);
    else if (key == "grid.nz") c.grid.nz = parse_int<int>(key, v);
    else if (key.rfind("constants.", 0) == 0) constant_overrides[key.substr(10)] = v;
    else if (key == "train.epochs") c.train.epochs = parse_int<int>(key, v);
    else if (key == "train.learning_rate") c.train.learning_rate = num();
    else if (key == "train.final_learning_rate") c.train.final_learning_rate = num();
    else if (key == "train.schedule") {
      if (v == "constant") c.train.schedule = rom::LrSchedule::Constant;
      else if (v == "cosine") c.train.schedule = rom::LrSchedule::Cosine;
      else throw SchemaError("train.schedule must be constant or cosine");
    }
    else if (key == "train.hidden") c.train.hidden = parse_int<int>(key, v);
    else if (key == "train.n_free") c.train.n_free = parse_int<int>(key, v);
    else if (key == "train.early_stop_mse") c.train.early_stop_mse = num();
    else if (key == "train.grad_clip") c.train.grad_clip = num();
    else if (key == "train.curriculum_start") c.train.curriculum_start = parse_int<int>(key, v);
    else if (key == "train.curriculum_fraction") c.train.curriculum_fraction = num();
    else throw SchemaError("unknown config key '" + key + "'");
  }
  if (!constant_overrides.empty()) c.constants.apply_overrides(constant_overrides);
  if (c.workspace.is_relative() && !base_dir.empty()) c.workspace = base_dir / c.workspace;
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  auto c = parse_config(csv::read_text(path), path.parent_path());
  if (const char* ws = std::getenv("TWINFORGE_WORKSPACE"); ws && *ws) c.workspace = ws;
  return c;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::vector<std::optional<std::string>> run_parallel(std::size_t count, int jobs,
                                                     const std::function<void(std::size_t)>& task) {
  std::vector<std::optional<std::string>> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const auto n = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return errors;
}

// ---------------------------------------------------------------------------
// Workspace

Workspace::Workspace(ExperimentConfig config) : config_(std::move(config)) { config_.validate(); }

void Workspace::log(const std::string& line) const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  std::lock_guard lock(g_log_mutex);
  fs::create_directories(report_dir());
  std::ofstream out(report_dir() / "log.txt", std::ios::app);
  out << stamp.str() << ' ' << line << '\n';
  std::cerr << line << '\n';
}

std::vector<std::string> Workspace::signal_ids() const {
  std::vector<std::string> ids;
  if (!fs::exists(signals_dir())) return ids;
  for (const auto& e : fs::directory_iterator(signals_dir())) {
    if (e.path().extension() == ".json") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

signals::Signal Workspace::signal(const std::string& id) const { return signals::read_signal(signals_dir(), id); }

std::string Workspace::cache_key(const signals::Signal& signal) const {
  std::string data = "signal\n";
  for (std::size_t k = 0; k < signal.size(); ++k) {
    data += format_double(signal.times[k]) + ',' + format_double(signal.values[k]) + '\n';
  }
  data += "grid\n" + config_.grid.canonical() + "constants\n" + config_.constants.canonical() +
          "solver\n" + core::kSolverVersion + '\n';
  return sha256_hex(data);
}

fs::path Workspace::result_path(const signals::Signal& signal) const {
  return simresults_dir() / (signal.id + "." + cache_key(signal).substr(0, 16) + ".csv");
}

core::SimResult Workspace::result(const signals::Signal& signal) const {
  const auto path = result_path(signal);
  if (!fs::exists(path)) {
    throw IoError("no simulation result for signal '" + signal.id + "'; run `simulate` first");
  }
  auto r = read_result(path);
  r.signal_id = signal.id;
  return r;
}

rom::RomModel Workspace::model(const std::string& rom_id) const {
  const auto path = models_dir() / (rom_id + ".json");
  if (!fs::exists(path)) throw IoError("missing model '" + rom_id + "'; run `train` first");
  return rom::load_model(path);
}

std::vector<std::string> Workspace::model_ids() const {
  std::vector<std::string> ids;
  if (!fs::exists(models_dir())) return ids;
  for (const auto& e : fs::directory_iterator(models_dir())) {
    const auto name = e.path().filename().string();
    if (e.path().extension() == ".json" && name.find(".train.") == std::string::npos) {
      ids.push_back(e.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string rom_id_for(const std::string& signal_id) { return "rom-" + signal_id; }

std::string rom_kind(signals::SignalKind kind) {
  using signals::SignalKind;
  switch (kind) {
    case SignalKind::Aprbs: return "aprbs";
    case SignalKind::SinAprbs: return "sinaprbs";
    case SignalKind::Multisine:
    case SignalKind::SchroederMultisine: return "multisine";
    case SignalKind::Step: return "step";
    case SignalKind::Sine: return "sine";
    case SignalKind::Concat: return "concat";
  }
  return "unknown";
}

void write_result(const fs::path& path, const core::SimResult& r) {
  csv::Table t;
  t.header = {"t_s", "T_oven_K", "T_A_K", "T_B_K"};
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    t.rows.push_back({format_double(r.times[k]), format_double(r.T_oven[k]), format_double(r.T_A[k]),
                      format_double(r.T_B[k])});
  }
  csv::write(path, t);
}

core::SimResult read_result(const fs::path& path) {
  const auto t = csv::read(path);
  core::SimResult r;
  r.times = t.numeric_column("t_s");
  r.T_oven = t.numeric_column("T_oven_K");
  r.T_A = t.numeric_column("T_A_K");
  r.T_B = t.numeric_column("T_B_K");
  return r;
}

// ---------------------------------------------------------------------------
// Stages

std::vector<signals::Signal> synthesize_bank(const ExperimentConfig& config) {
  using namespace signals;
  std::vector<Signal> bank;
  for (int i = 1; i <= config.bank.aprbs; ++i) {
    AprbsParams p;
    p.seed = derive_seed(config.seed, 0xA000 + static_cast<std::uint64_t>(i));
    bank.push_back(synth_aprbs(p, padded("ap", i)));
  }
  for (int i = 1; i <= config.bank.sinaprbs; ++i) {
    AprbsParams p;
    p.seed = derive_seed(config.seed, 0xB000 + static_cast<std::uint64_t>(i));
    const auto parent = synth_aprbs(p, padded("sap", i) + "-src");
    bank.push_back(aprbs_to_sinaprbs(parent, TransitionSpeed::Full, padded("sap", i)));
  }
  for (int i = 1; i <= config.bank.multisine; ++i) {
    MultisineParams p;
    p.seed = derive_seed(config.seed, 0xC000 + static_cast<std::uint64_t>(i));
    bank.push_back(synth_multisine(p, padded("ms", i)));
  }
  for (int i = 1; i <= config.bank.schroeder; ++i) {
    MultisineParams p;
    p.seed = derive_seed(config.seed, 0xD000 + static_cast<std::uint64_t>(i));
    p.schroeder = true;
    bank.push_back(synth_multisine(p, padded("sms", i)));
  }
  if (config.bank.step) bank.push_back(synth_step(kOvenMax, 0.0, kDefaultHorizon, "step"));
  // Full-range sine, two and a half periods over the horizon.
  if (config.bank.sine) {
    bank.push_back(synth_sine(0.5 * (kOvenMax - kOvenMin), 2.5 / kDefaultHorizon,
                              0.5 * (kOvenMax + kOvenMin), kDefaultHorizon, "sine"));
  }
  return bank;
}

std::vector<std::string> cmd_synth(const Workspace& ws) {
  std::vector<std::string> ids;
  for (const auto& s : synthesize_bank(ws.config())) {
    signals::write_signal(ws.signals_dir(), s);
    ids.push_back(s.id);
  }
  ws.log("synth: " + std::to_string(ids.size()) + " signals");
  return ids;
}

SimulateSummary cmd_simulate(const Workspace& ws, const std::vector<std::string>& ids_in) {
  const auto ids = ids_in.empty() ? ws.signal_ids() : ids_in;
  std::vector<signals::Signal> todo;
  SimulateSummary summary;
  for (const auto& id : ids) {
    auto s = ws.signal(id);
    if (fs::exists(ws.result_path(s))) {
      ++summary.cache_hits;
    } else {
      todo.push_back(std::move(s));
    }
  }
  const auto& cfg = ws.config();
  const auto errors = run_parallel(todo.size(), cfg.jobs, [&](std::size_t i) {
    const auto r = core::simulate(todo[i], cfg.grid, cfg.constants);
    write_result(ws.result_path(todo[i]), r);
  });
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (errors[i]) {
      summary.failures.emplace_back(todo[i].id, *errors[i]);
      ws.log("simulate: " + todo[i].id + " failed: " + *errors[i]);
    } else {
      ++summary.computed;
    }
  }
  ws.log("simulate: " + std::to_string(summary.computed) + " computed, " +
         std::to_string(summary.cache_hits) + " cache hits, " + std::to_string(summary.failures.size()) +
         " failures");
  return summary;
}

std::vector<TestSet> cmd_testset(const Workspace& ws) {
  const auto& cfg = ws.config();
  const auto bank = synthesize_bank(cfg);
  struct Group {
    std::string prefix;
    std::vector<signals::SignalKind> kinds;
  };
  using signals::SignalKind;
  const std::vector<Group> groups = {{"AP", {SignalKind::Aprbs}},
                                     {"sinAP", {SignalKind::SinAprbs}},
                                     {"MS", {SignalKind::Multisine, SignalKind::SchroederMultisine}}};
  std::vector<TestSet> sets;
  TestSet mixed{"Mixed", {}, std::nullopt, 0};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<eval::Candidate> pool;
    for (const auto& s : bank) {
      if (std::find(groups[g].kinds.begin(), groups[g].kinds.end(), s.kind) == groups[g].kinds.end()) continue;
      const auto r = ws.result(s);
      pool.push_back({s.id, eval::quantile(r.T_B, 0.5)});
    }
    if (pool.empty()) continue;
    const auto pick = eval::select_fair_subset(pool, cfg.test_size, derive_seed(cfg.seed, 0xE000 + g));
    TestSet t{set_name(groups[g].prefix, cfg.test_size), pick.ids, pick.chi2, pick.tries};
    mixed.signal_ids.insert(mixed.signal_ids.end(), pick.ids.begin(), pick.ids.end());
    sets.push_back(std::move(t));
  }
  std::sort(mixed.signal_ids.begin(), mixed.signal_ids.end());
  if (!mixed.signal_ids.empty()) sets.push_back(std::move(mixed));

  std::map<std::string, double> medians;
  for (const auto& s : bank) {
    if (fs::exists(ws.result_path(s))) medians[s.id] = eval::quantile(ws.result(s).T_B, 0.5);
  }
  csv::Table members{{"testset", "signal_id", "median_T_B_K"}, {}};
  csv::Table chi{{"testset", "statistic", "p_value", "df", "pass", "tries", "counts"}, {}};
  for (const auto& t : sets) {
    for (const auto& id : t.signal_ids) members.rows.push_back({t.id, id, format_double(medians.at(id))});
    if (t.chi2) {
      std::vector<std::string> counts;
      for (int c : t.chi2->counts) counts.push_back(std::to_string(c));
      chi.rows.push_back({t.id, format_double(t.chi2->statistic), format_double(t.chi2->p_value),
                          std::to_string(t.chi2->df), t.chi2->pass ? "1" : "0", std::to_string(t.tries),
                          join(counts, " ")});
    }
  }
  csv::write(ws.eval_dir() / "testsets.csv", members);
  csv::write(ws.eval_dir() / "testset_chi2.csv", chi);
  ws.log("testset: " + std::to_string(sets.size()) + " sets");
  return sets;
}

std::vector<TestSet> load_testsets(const Workspace& ws) {
  const auto path = ws.eval_dir() / "testsets.csv";
  if (!fs::exists(path)) throw IoError("missing test sets; run `testset` first");
  const auto members = csv::read(path);
  std::vector<TestSet> sets;
  for (const auto& row : members.rows) {
    auto it = std::find_if(sets.begin(), sets.end(), [&](const TestSet& t) { return t.id == row[0]; });
    if (it == sets.end()) {
      sets.push_back({row[0], {}, std::nullopt, 0});
      it = std::prev(sets.end());
    }
    it->signal_ids.push_back(row[1]);
  }
  const auto chi = csv::read(ws.eval_dir() / "testset_chi2.csv");
  for (const auto& row : chi.rows) {
    for (auto& t : sets) {
      if (t.id != row[0]) continue;
      eval::Chi2Result r{};
      r.statistic = csv::parse_double(row[1]);
      r.p_value = csv::parse_double(row[2]);
      r.df = std::stoi(row[3]);
      r.pass = row[4] == "1";
      std::istringstream counts(row[6]);
      for (int c; counts >> c;) r.counts.push_back(c);
      t.chi2 = r;
      t.tries = std::stoi(row[5]);
    }
  }
  return sets;
}

const TestSet& find_testset(const std::vector<TestSet>& sets, const std::string& prefix) {
  for (const auto& t : sets) {
    if (t.id.rfind(prefix, 0) != 0) continue;
    const auto rest = t.id.substr(prefix.size());
    if (std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; })) return t;
  }
  throw IoError("no test set '" + prefix + "'");
}

std::vector<std::string> training_candidates(const Workspace& ws, const std::vector<TestSet>& sets) {
  std::set<std::string> test_ids;
  for (const auto& t : sets) test_ids.insert(t.signal_ids.begin(), t.signal_ids.end());
  std::vector<std::string> out;
  for (const auto& s : synthesize_bank(ws.config())) {
    if (!test_ids.count(s.id)) out.push_back(s.id);
  }
  return out;
}

std::vector<TrainSummary> cmd_train(const Workspace& ws, const std::vector<std::string>& signal_ids) {
  std::vector<std::string> todo;
  for (const auto& id : signal_ids) {
    if (!fs::exists(ws.models_dir() / (rom_id_for(id) + ".json"))) todo.push_back(id);
  }
  std::vector<TrainSummary> done(todo.size());
  const auto& cfg = ws.config();
  const auto errors = run_parallel(todo.size(), cfg.jobs, [&](std::size_t i) {
    const auto s = ws.signal(todo[i]);
    const rom::Scenario sc[1] = {rom::make_scenario(s, ws.result(s))};
    auto tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, fnv1a(s.id));
    const auto res = rom::train(sc, tc);
    const auto rom_id = rom_id_for(s.id);
    csv::Table curve{{"epoch", "loss"}, {}};
    for (std::size_t e = 0; e < res.report.epoch_loss.size(); ++e) {
      curve.rows.push_back({std::to_string(e + 1), format_double(res.report.epoch_loss[e])});
    }
    csv::write(ws.models_dir() / (rom_id + ".loss.csv"), curve);
    nlohmann::json info = {{"signal_id", s.id},
                           {"initial_loss", res.report.initial_loss},
                           {"final_loss", res.report.final_loss},
                           {"train_rmse_K", res.report.train_rmse.at(0)},
                           {"epochs_run", res.report.epochs_run}};
    csv::write_text(ws.models_dir() / (rom_id + ".train.json"), info.dump(1) + "\n");
    rom::save_model(res.model, ws.models_dir() / (rom_id + ".json"));
    done[i] = {rom_id, s.id, res.report.initial_loss, res.report.final_loss, res.report.train_rmse.at(0),
               res.report.epochs_run};
  });
  std::vector<TrainSummary> out;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (errors[i]) {
      ws.log("train: " + todo[i] + " failed: " + *errors[i]);
    } else {
      out.push_back(done[i]);
    }
  }
  ws.log("train: " + std::to_string(out.size()) + " trained, " +
         std::to_string(signal_ids.size() - todo.size()) + " already present");
  return out;
}

namespace {

std::vector<TrainSummary> read_train_summaries(const Workspace& ws, const std::vector<std::string>& rom_ids) {
  std::vector<TrainSummary> out;
  for (const auto& id : rom_ids) {
    const auto path = ws.models_dir() / (id + ".train.json");
    if (!fs::exists(path)) continue;
    const auto j = nlohmann::json::parse(csv::read_text(path));
    out.push_back({id, j.at("signal_id").get<std::string>(), j.at("initial_loss").get<double>(),
                   j.at("final_loss").get<double>(), j.at("train_rmse_K").get<double>(),
                   j.at("epochs_run").get<int>()});
  }
  return out;
}

std::vector<ErrorRow> evaluate_models(const Workspace& ws, const std::vector<std::string>& rom_ids,
                                      const std::vector<std::string>& signal_ids) {
  std::vector<signals::Signal> sigs;
  std::vector<core::SimResult> refs;
  for (const auto& id : signal_ids) {
    sigs.push_back(ws.signal(id));
    refs.push_back(ws.result(sigs.back()));
  }
  std::vector<std::vector<ErrorRow>> per_rom(rom_ids.size());
  const auto errors = run_parallel(rom_ids.size(), ws.config().jobs, [&](std::size_t i) {
    const auto model = ws.model(rom_ids[i]);
    for (std::size_t j = 0; j < sigs.size(); ++j) {
      ErrorRow row{rom_ids[i], sigs[j].id, std::nullopt};
      try {
        row.m = eval::evaluate_rom(model, sigs[j], refs[j]);
      } catch (const RolloutDivergedError&) {
      }
      per_rom[i].push_back(std::move(row));
    }
  });
  std::vector<ErrorRow> rows;
  for (std::size_t i = 0; i < rom_ids.size(); ++i) {
    if (errors[i]) throw IoError("evaluation of " + rom_ids[i] + " failed: " + *errors[i]);
    rows.insert(rows.end(), per_rom[i].begin(), per_rom[i].end());
  }
  return rows;
}

void write_error_rows(const fs::path& path, const std::vector<ErrorRow>& rows) {
  csv::Table t;
  t.header = {"rom_id", "signal_id", "status"};
  for (const auto& h : measure_header()) t.header.push_back(h);
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.rom_id, r.signal_id, r.m ? "ok" : "diverged"};
    if (r.m) {
      append_measures(row, *r.m);
    } else {
      row.insert(row.end(), 6, "");
    }
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

void write_aggregates(const fs::path& path, const std::vector<Aggregate>& aggs) {
  csv::Table t;
  t.header = {"rom_id", "kind", "testset", "n", "n_diverged"};
  for (const auto& h : measure_header()) t.header.push_back(h);
  for (const auto& a : aggs) {
    std::vector<std::string> row = {a.rom_id, a.kind, a.testset, std::to_string(a.n), std::to_string(a.n_diverged)};
    append_measures(row, a.mean);
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

std::vector<Aggregate> read_aggregates(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing " + path.filename().string() + "; run `eval` first");
  const auto t = csv::read(path);
  std::vector<Aggregate> out;
  for (const auto& row : t.rows) {
    out.push_back({row[0], row[1], row[2], std::stoi(row[3]), std::stoi(row[4]), measures_from(t, row)});
  }
  return out;
}

std::string rom_kind_of(const Workspace& ws, const std::string& rom_id) {
  return rom_kind(ws.signal(rom_id.substr(4)).kind);
}

}  // namespace

std::vector<Aggregate> aggregate_rows(const Workspace& ws, const std::vector<ErrorRow>& rows, const TestSet& set) {
  const std::set<std::string> members(set.signal_ids.begin(), set.signal_ids.end());
  std::map<std::string, std::pair<std::vector<eval::MeasureSet>, int>> by_rom;
  for (const auto& r : rows) {
    if (!members.count(r.signal_id)) continue;
    auto& slot = by_rom[r.rom_id];
    if (r.m) {
      slot.first.push_back(*r.m);
    } else {
      ++slot.second;
    }
  }
  std::vector<Aggregate> out;
  for (const auto& [rom_id, slot] : by_rom) {
    Aggregate a{rom_id, rom_kind_of(ws, rom_id), set.id, static_cast<int>(slot.first.size()), slot.second, {}};
    if (!slot.first.empty()) a.mean = eval::aggregate(slot.first);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<ErrorRow> cmd_eval(const Workspace& ws, const std::vector<std::string>& rom_ids, const TestSet& set) {
  const auto rows = evaluate_models(ws, rom_ids, set.signal_ids);
  write_error_rows(ws.eval_dir() / ("errors_" + set.id + ".csv"), rows);
  write_aggregates(ws.eval_dir() / ("aggregates_" + set.id + ".csv"), aggregate_rows(ws, rows, set));
  ws.log("eval: " + std::to_string(rom_ids.size()) + " ROMs on " + set.id);
  return rows;
}

std::vector<kpis::KpiRecord> cmd_kpi(const Workspace& ws) {
  std::vector<kpis::KpiRecord> out;
  csv::Table t{kpis::kpi_columns(), {}};
  for (const auto& id : ws.signal_ids()) {
    const auto s = ws.signal(id);
    if (!fs::exists(ws.result_path(s))) continue;
    out.push_back(kpis::compute_kpis(s, ws.result(s)));
    t.rows.push_back(kpis::kpi_row(out.back()));
  }
  csv::write(ws.eval_dir() / "kpis.csv", t);
  ws.log("kpi: " + std::to_string(out.size()) + " signals");
  return out;
}

std::optional<eval::CorrelationTable> cmd_correlate(const Workspace& ws) {
  const auto sets = load_testsets(ws);
  const auto& ap = find_testset(sets, "AP");
  const auto aggs = read_aggregates(ws.eval_dir() / ("aggregates_" + ap.id + ".csv"));
  std::vector<kpis::KpiRecord> records;
  std::vector<eval::MeasureSet> measures;
  std::vector<std::string> ids;
  for (const auto& a : aggs) {
    if (a.kind != "aprbs" || a.n_diverged > 0 || a.n == 0) continue;
    const auto s = ws.signal(a.rom_id.substr(4));
    records.push_back(kpis::compute_kpis(s, ws.result(s)));
    measures.push_back(a.mean);
    ids.push_back(a.rom_id);
  }
  if (records.size() < 3) {
    ws.log("correlate: fewer than three APRBS ROMs; skipped");
    return std::nullopt;
  }
  const auto table = eval::pearson_table(records, measures);
  csv::Table out;
  out.header = {"measure"};
  out.header.insert(out.header.end(), table.kpis.begin(), table.kpis.end());
  for (std::size_t i = 0; i < table.measures.size(); ++i) {
    std::vector<std::string> row = {table.measures[i]};
    for (const auto& v : table.r[i]) row.push_back(v ? format_double(*v) : "NA");
    out.rows.push_back(std::move(row));
  }
  csv::write(ws.eval_dir() / ("correlation_" + ap.id + ".csv"), out);

  csv::Table scatter;
  scatter.header = {"rom_id"};
  for (const auto& k : table.kpis) scatter.header.push_back(k);
  for (const auto& h : measure_header()) scatter.header.push_back(h);
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<std::string> row = {ids[i]};
    for (const auto& k : table.kpis) {
      const auto v = eval::kpi_value(records[i], k);
      row.push_back(v ? format_double(*v) : "NA");
    }
    append_measures(row, measures[i]);
    scatter.rows.push_back(std::move(row));
  }
  csv::write(ws.eval_dir() / ("kpi_error_scatter_" + ap.id + ".csv"), scatter);
  ws.log("correlate: " + std::to_string(records.size()) + " APRBS ROMs on " + ap.id);
  return table;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct Ranked {
  std::vector<eval::RankedRom> ranking;
  std::vector<eval::KindSummary> best;
};

Ranked rank_set(const std::vector<Aggregate>& aggs, int k) {
  std::vector<eval::RankedRom> roms;
  std::map<std::string, int> per_kind;
  for (const auto& a : aggs) {
    if (a.n_diverged > 0 || a.n == 0) continue;
    roms.push_back({a.rom_id, a.kind, a.mean});
    ++per_kind[a.kind];
  }
  auto [ranking, _] = eval::rank_and_best_k(roms, 1);
  std::vector<eval::RankedRom> eligible;
  for (const auto& r : roms) {
    if (per_kind[r.kind] >= k && r.kind != "step" && r.kind != "sine") eligible.push_back(r);
  }
  Ranked out{ranking, {}};
  if (!eligible.empty()) out.best = eval::rank_and_best_k(eligible, k).second;
  return out;
}

const eval::KindSummary* find_kind(const std::vector<eval::KindSummary>& v, const std::string& kind) {
  for (const auto& s : v) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

const Aggregate* find_agg(const std::vector<Aggregate>& v, const std::string& rom_id) {
  for (const auto& a : v) {
    if (a.rom_id == rom_id) return &a;
  }
  return nullptr;
}

std::string status_name(Check::Status s) {
  switch (s) {
    case Check::Pass: return "PASS";
    case Check::Fail: return "FAIL";
    case Check::Skip: return "SKIP";
  }
  return "?";
}

}  // namespace

int cmd_pipeline(const Workspace& ws) {
  const auto& cfg = ws.config();
  const auto t_start = std::chrono::steady_clock::now();
  ws.log("pipeline: start, workspace " + cfg.workspace.string() + ", seed " + std::to_string(cfg.seed));

  cmd_synth(ws);
  const auto sim = cmd_simulate(ws);
  if (!sim.failures.empty()) ws.log("pipeline: continuing without " + std::to_string(sim.failures.size()) + " failed signals");
  const auto sets = cmd_testset(ws);

  std::vector<std::string> train_ids;
  for (const auto& id : training_candidates(ws, sets)) {
    if (fs::exists(ws.result_path(ws.signal(id)))) train_ids.push_back(id);
  }
  cmd_train(ws, train_ids);
  cmd_kpi(ws);

  std::vector<std::string> rom_ids;
  for (const auto& id : train_ids) {
    if (fs::exists(ws.models_dir() / (rom_id_for(id) + ".json"))) rom_ids.push_back(rom_id_for(id));
  }
  const auto summaries = read_train_summaries(ws, rom_ids);
  {
    csv::Table t{{"rom_id", "signal_id", "initial_loss", "final_loss", "train_rmse_K", "epochs_run"}, {}};
    for (const auto& s : summaries) {
      t.rows.push_back({s.rom_id, s.signal_id, format_double(s.initial_loss), format_double(s.final_loss),
                        format_double(s.train_rmse), std::to_string(s.epochs_run)});
    }
    csv::write(ws.eval_dir() / "train_summary.csv", t);
  }

  std::vector<Check> checks;
  auto add = [&](std::string name, std::string detail, Check::Status st) {
    checks.push_back({std::move(name), std::move(detail), st});
  };

  // No training signal in any test set.
  {
    std::set<std::string> test_ids;
    for (const auto& t : sets) test_ids.insert(t.signal_ids.begin(), t.signal_ids.end());
    int leaks = 0;
    for (const auto& id : train_ids) leaks += static_cast<int>(test_ids.count(id));
    add("no_train_test_overlap", std::to_string(leaks) + " overlapping signals", leaks ? Check::Fail : Check::Pass);
  }
  for (const auto& t : sets) {
    if (!t.chi2) continue;
    add("chi2_uniform_" + t.id, "p = " + fixed(t.chi2->p_value) + " after " + std::to_string(t.tries) + " tries",
        t.chi2->pass ? Check::Pass : Check::Fail);
  }

  // Evaluation on the union, aggregated per set.
  const auto& mixed = find_testset(sets, "Mixed");
  const auto rows = cmd_eval(ws, rom_ids, mixed);
  std::map<std::string, std::vector<Aggregate>> aggs;
  std::map<std::string, Ranked> ranked;
  csv::Table best_table{{"testset", "kind", "k", "rom_ids"}, {}};
  for (const auto& h : measure_header()) best_table.header.push_back(h);
  for (const auto& t : sets) {
    aggs[t.id] = aggregate_rows(ws, rows, t);
    if (t.id != mixed.id) write_aggregates(ws.eval_dir() / ("aggregates_" + t.id + ".csv"), aggs[t.id]);
    ranked[t.id] = rank_set(aggs[t.id], cfg.best_k);
    csv::Table rt{{"rank", "rom_id", "kind"}, {}};
    for (const auto& h : measure_header()) rt.header.push_back(h);
    for (std::size_t i = 0; i < ranked[t.id].ranking.size(); ++i) {
      const auto& r = ranked[t.id].ranking[i];
      std::vector<std::string> row = {std::to_string(i + 1), r.rom_id, r.kind};
      append_measures(row, r.mean);
      rt.rows.push_back(std::move(row));
    }
    csv::write(ws.eval_dir() / ("ranking_" + t.id + ".csv"), rt);
    for (const auto& b : ranked[t.id].best) {
      std::vector<std::string> row = {t.id, b.kind, std::to_string(cfg.best_k), join(b.best_ids, " ")};
      append_measures(row, b.best_k_mean);
      best_table.rows.push_back(std::move(row));
    }
  }
  csv::write(ws.eval_dir() / "best_k.csv", best_table);
  const auto correlation = cmd_correlate(ws);

  std::ostringstream md;
  md << "# Experiment report\n\n";
  md << "Seed " << cfg.seed << ". Bank: " << cfg.bank.aprbs << " APRBS, " << cfg.bank.sinaprbs << " sinAPRBS, "
     << cfg.bank.multisine << " multi-sine, " << cfg.bank.schroeder << " Schroeder multi-sine"
     << (cfg.bank.step ? ", step" : "") << (cfg.bank.sine ? ", sine" : "") << ". " << rom_ids.size()
     << " 1-signal ROMs trained; errors on T_B.\n\n";
  md << "## Test sets\n\n| set | signals | chi2 | p | pass |\n|---|---|---|---|---|\n";
  for (const auto& t : sets) {
    md << "| " << t.id << " | " << t.signal_ids.size() << " | "
       << (t.chi2 ? fixed(t.chi2->statistic) : "-") << " | " << (t.chi2 ? fixed(t.chi2->p_value) : "-") << " | "
       << (t.chi2 ? (t.chi2->pass ? "yes" : "no") : "-") << " |\n";
  }

  // Best ROM per kind on the union set.
  md << "\n## Best ROM per kind on " << mixed.id << "\n\n| kind | ROM | RMSE | MAPE | MAX | MEDIAN | IQR | R2 |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  std::set<std::string> kinds_seen;
  for (const auto& r : ranked[mixed.id].ranking) {
    if (!kinds_seen.insert(r.kind).second) continue;
    md << "| " << r.kind << " | " << r.rom_id;
    for (int i = 0; i < 6; ++i) md << " | " << fixed(eval::measure(r.mean, i));
    md << " |\n";
  }
  md << "\n## Best-" << cfg.best_k << " mean RMSE per kind (K)\n\n| set | kind | RMSE | ROMs |\n|---|---|---|---|\n";
  for (const auto& t : sets) {
    for (const auto& b : ranked[t.id].best) {
      md << "| " << t.id << " | " << b.kind << " | " << fixed(b.best_k_mean.rmse) << " | " << join(b.best_ids, " ")
         << " |\n";
    }
  }

  // Headline: the APRBS ROM whose training run has the largest STD(T_B).
  const TestSet* ap = nullptr;
  for (const auto& t : sets) {
    if (t.id == set_name("AP", cfg.test_size)) ap = &t;
  }
  std::string headline_rom;
  if (ap) {
    double best_std = -1.0;
    for (const auto& a : aggs[ap->id]) {
      if (a.kind != "aprbs") continue;
      const auto s = ws.signal(a.rom_id.substr(4));
      const double sd = kpis::series_stats(ws.result(s).T_B).std;
      if (sd > best_std) {
        best_std = sd;
        headline_rom = a.rom_id;
      }
    }
    if (!headline_rom.empty()) {
      const auto* a = find_agg(aggs[ap->id], headline_rom);
      md << "\n## Headline ROM\n\n" << headline_rom << " (largest STD(T_B) among APRBS training signals) on "
         << ap->id << ": ";
      if (a->n_diverged > 0) {
        md << a->n_diverged << " diverged rollouts\n";
        add("headline_aprbs_rmse", headline_rom + " diverged on " + std::to_string(a->n_diverged) + " signals",
            Check::Fail);
      } else {
        for (int i = 0; i < 6; ++i) md << (i ? ", " : "") << eval::kMeasureNames[i] << " " << fixed(eval::measure(a->mean, i));
        md << "\n";
        add("headline_aprbs_rmse", "RMSE " + fixed(a->mean.rmse) + " K <= 2.5",
            a->mean.rmse <= 2.5 ? Check::Pass : Check::Fail);
        add("headline_aprbs_mape", "MAPE " + fixed(a->mean.mape) + " % <= 1",
            a->mean.mape <= 1.0 ? Check::Pass : Check::Fail);
      }
    }
  }

  // Correlations.
  if (correlation && ap) {
    const auto r_std = correlation->at("RMSE", "std_T_B");
    const auto r_diff = correlation->at("RMSE", "mean_diff_excl_first");
    std::size_t n = 0;
    for (const auto& a : aggs[ap->id]) n += (a.kind == "aprbs" && a.n_diverged == 0 && a.n > 0);
    md << "\n## KPI correlation on " << ap->id << " (" << n << " APRBS ROMs)\n\n"
       << "corr(STD(T_B), RMSE) = " << (r_std ? fixed(*r_std) : "NA")
       << "; corr(mean jump excluding the first, RMSE) = " << (r_diff ? fixed(*r_diff) : "NA") << "\n";
    const bool enough = static_cast<int>(n) >= cfg.min_correlation_roms;
    add("corr_std_TB_rmse", "r = " + (r_std ? fixed(*r_std) : std::string("NA")) + " < -0.3 over " + std::to_string(n) + " ROMs",
        !enough ? Check::Skip : (r_std && *r_std < -0.3 ? Check::Pass : Check::Fail));
    add("corr_mean_jump_rmse", "r = " + (r_diff ? fixed(*r_diff) : std::string("NA")) + " < -0.2 over " + std::to_string(n) + " ROMs",
        !enough ? Check::Skip : (r_diff && *r_diff < -0.2 ? Check::Pass : Check::Fail));
  }

  // Signal-type ordering on the union.
  const auto* best_ap = find_kind(ranked[mixed.id].best, "aprbs");
  const auto* best_ms = find_kind(ranked[mixed.id].best, "multisine");
  if (best_ap && best_ms) {
    add("bestk_aprbs_le_multisine",
        fixed(best_ap->best_k_mean.rmse) + " K <= " + fixed(best_ms->best_k_mean.rmse) + " K",
        best_ap->best_k_mean.rmse <= best_ms->best_k_mean.rmse ? Check::Pass : Check::Fail);
  }
  const Aggregate* step_agg = find_agg(aggs[mixed.id], rom_id_for("step"));
  if (step_agg && best_ap) {
    const auto& top = ranked[mixed.id].ranking;
    const auto it = std::find_if(top.begin(), top.end(), [](const auto& r) { return r.kind == "aprbs"; });
    const bool diverged = step_agg->n_diverged > 0;
    add("step_ge_5x_best_aprbs",
        diverged ? std::string("step ROM diverged on ") + std::to_string(step_agg->n_diverged) + " signals"
                 : fixed(step_agg->mean.rmse) + " K >= 5 x " + fixed(it->mean.rmse) + " K",
        diverged || step_agg->mean.rmse >= 5.0 * it->mean.rmse ? Check::Pass : Check::Fail);
  }

  // sinAPRBS transforms of the best-k APRBS ROMs.
  if (best_ap) {
    std::vector<std::string> fast_ids, slow_ids;
    for (const auto& rom : best_ap->best_ids) {
      const auto parent = ws.signal(rom.substr(4));
      const auto f = signals::aprbs_to_sinaprbs(parent, signals::TransitionSpeed::Fast, parent.id + "f");
      const auto s = signals::aprbs_to_sinaprbs(parent, signals::TransitionSpeed::Slow, parent.id + "s");
      signals::write_signal(ws.signals_dir(), f);
      signals::write_signal(ws.signals_dir(), s);
      fast_ids.push_back(f.id);
      slow_ids.push_back(s.id);
    }
    std::vector<std::string> all = fast_ids;
    all.insert(all.end(), slow_ids.begin(), slow_ids.end());
    cmd_simulate(ws, all);
    cmd_train(ws, all);
    std::vector<std::string> study_roms;
    for (const auto& id : all) study_roms.push_back(rom_id_for(id));
    const auto study_rows = evaluate_models(ws, study_roms, mixed.signal_ids);
    write_error_rows(ws.eval_dir() / "errors_sin_study.csv", study_rows);
    const auto study_aggs = aggregate_rows(ws, study_rows, mixed);

    csv::Table t{{"variant", "rom_id", "parent_rom_id", "n_diverged"}, {}};
    for (const auto& h : measure_header()) t.header.push_back(h);
    std::map<std::string, std::vector<eval::MeasureSet>> by_variant;
    int diverged = 0;
    auto emit = [&](const std::string& variant, const std::string& rom_id, const std::string& parent,
                    const Aggregate& a) {
      std::vector<std::string> row = {variant, rom_id, parent, std::to_string(a.n_diverged)};
      append_measures(row, a.mean);
      t.rows.push_back(std::move(row));
      if (a.n_diverged == 0) by_variant[variant].push_back(a.mean);
      diverged += a.n_diverged > 0;
    };
    for (std::size_t i = 0; i < best_ap->best_ids.size(); ++i) {
      const auto& parent = best_ap->best_ids[i];
      emit("aprbs", parent, parent, *find_agg(aggs[mixed.id], parent));
      emit("fast", rom_id_for(fast_ids[i]), parent, *find_agg(study_aggs, rom_id_for(fast_ids[i])));
      emit("slow", rom_id_for(slow_ids[i]), parent, *find_agg(study_aggs, rom_id_for(slow_ids[i])));
    }
    csv::write(ws.eval_dir() / "sin_study.csv", t);
    auto mean_rmse = [&](const std::string& v) {
      const auto& ms = by_variant[v];
      return ms.empty() ? std::numeric_limits<double>::infinity() : eval::aggregate(ms).rmse;
    };
    const double r_ap = mean_rmse("aprbs"), r_fast = mean_rmse("fast"), r_slow = mean_rmse("slow");
    md << "\n## sinAPRBS transforms of the best-" << cfg.best_k << " APRBS ROMs on " << mixed.id << "\n\n"
       << "mean RMSE: APRBS " << fixed(r_ap) << " K, fast " << fixed(r_fast) << " K, slow " << fixed(r_slow)
       << " K" << (diverged ? " (" + std::to_string(diverged) + " ROMs with diverged rollouts excluded)" : "")
       << "\n";
    add("sin_aprbs_le_fast", fixed(r_ap) + " K <= " + fixed(r_fast) + " K", r_ap <= r_fast ? Check::Pass : Check::Fail);
    add("sin_fast_le_slow", fixed(r_fast) + " K <= " + fixed(r_slow) + " K", r_fast <= r_slow ? Check::Pass : Check::Fail);
  }

  // Extrapolation beyond the training horizon.
  if (ap && !headline_rom.empty()) {
    const auto src = ws.signal(ap->signal_ids.front());
    const auto rep = signals::concat_repeat(src, cfg.extrapolation_repeats);
    signals::write_signal(ws.signals_dir(), rep);
    cmd_simulate(ws, {rep.id});
    const auto ref = ws.result(rep);
    csv::Table t{{"rom_id", "signal_id", "window", "status"}, {}};
    for (const auto& h : measure_header()) t.header.push_back(h);
    md << "\n## Extrapolation\n\n" << headline_rom << " on " << rep.id << ": ";
    try {
      const auto pred = rom::rollout(ws.model(headline_rom), rep, {ref.T_A.front(), ref.T_B.front()});
      const auto ex = eval::extrapolation_measures(pred, ref, src.horizon());
      std::vector<std::string> in = {headline_rom, rep.id, "in", "ok"}, out = {headline_rom, rep.id, "out", "ok"};
      append_measures(in, ex.in_window);
      append_measures(out, ex.out_of_window);
      t.rows.push_back(in);
      t.rows.push_back(out);
      md << "RMSE " << fixed(ex.in_window.rmse) << " K within the training horizon, " << fixed(ex.out_of_window.rmse)
         << " K beyond it" << (ex.out_exceeds_in ? "" : " (beyond-window error is the smaller one)") << "\n";
    } catch (const RolloutDivergedError& e) {
      t.rows.push_back({headline_rom, rep.id, "all", "diverged", "", "", "", "", "", ""});
      md << "rollout diverged\n";
    }
    csv::write(ws.eval_dir() / "extrapolation.csv", t);
  }

  // Wall-clock figures go to the log only.
  if (!rom_ids.empty()) {
    const auto model = ws.model(rom_ids.front());
    const auto s = ws.signal(rom_ids.front().substr(4));
    const auto ref = ws.result(s);
    const auto t0 = std::chrono::steady_clock::now();
    constexpr int reps = 20;
    for (int i = 0; i < reps; ++i) {
      try {
        (void)rom::rollout(model, s, {ref.T_A.front(), ref.T_B.front()});
      } catch (const RolloutDivergedError&) {
      }
    }
    const double rom_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
    const auto t1 = std::chrono::steady_clock::now();
    (void)core::simulate(s, cfg.grid, cfg.constants);
    const double fom_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    ws.log("timing: ROM rollout " + fixed(rom_s * 1e3) + " ms, FOM run " + fixed(fom_s) + " s, speed-up " +
           fixed(fom_s / rom_s, 0));
  }

  md << "\n## Acceptance checks\n\n| check | detail | status |\n|---|---|---|\n";
  csv::Table acc{{"check", "detail", "status"}, {}};
  bool failed = false;
  for (const auto& c : checks) {
    md << "| " << c.name << " | " << c.detail << " | " << status_name(c.status) << " |\n";
    acc.rows.push_back({c.name, c.detail, status_name(c.status)});
    failed = failed || c.status == Check::Fail;
  }
  csv::write(ws.report_dir() / "acceptance.csv", acc);
  csv::write_text(ws.report_dir() / "report.md", md.str());
  ws.log("pipeline: done in " + fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(), 1) +
         " s, " + (failed ? "acceptance checks failed" : "all acceptance checks passed"));
  return failed ? 1 : 0;
}

}  // namespace twinforge::pipeline
