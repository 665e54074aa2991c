#include "twinforge/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "twinforge/csv.hpp"
#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"

namespace twinforge::signals {

namespace {

constexpr std::uint64_t kTransitionStream = 0x51A9;
constexpr long kMaxRejections = 50'000'000;

std::string default_id(const char* prefix, std::uint64_t seed) {
  return std::string(prefix) + std::to_string(seed);
}

Signal make(std::string id, SignalKind kind, double horizon) {
  Signal s;
  s.id = std::move(id);
  s.kind = kind;
  s.times = sample_times(horizon);
  s.values.assign(s.times.size(), kOvenMin);
  return s;
}

AprbsParams aprbs_params_from(const nlohmann::json& meta) {
  AprbsParams p;
  p.seed = meta.at("seed").get<std::uint64_t>();
  p.horizon = meta.at("horizon").get<double>();
  p.T_min = meta.at("T_min").get<double>();
  p.T_max = meta.at("T_max").get<double>();
  p.t_hold = meta.at("t_hold").get<double>();
  p.T_margin = meta.at("T_margin").get<double>();
  return p;
}

TransitionSpeed speed_from_string(const std::string& s) {
  if (s == "fast") return TransitionSpeed::Fast;
  if (s == "slow") return TransitionSpeed::Slow;
  if (s == "full") return TransitionSpeed::Full;
  throw SchemaError("unknown transition speed '" + s + "'");
}

}  // namespace

std::string to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::Aprbs: return "aprbs";
    case SignalKind::SinAprbs: return "sinaprbs";
    case SignalKind::Multisine: return "multisine";
    case SignalKind::SchroederMultisine: return "schroeder-multisine";
    case SignalKind::Step: return "step";
    case SignalKind::Sine: return "sine";
    case SignalKind::Concat: return "concat";
  }
  return "unknown";
}

SignalKind kind_from_string(const std::string& name) {
  for (auto k : {SignalKind::Aprbs, SignalKind::SinAprbs, SignalKind::Multisine,
                 SignalKind::SchroederMultisine, SignalKind::Step, SignalKind::Sine,
                 SignalKind::Concat}) {
    if (to_string(k) == name) return k;
  }
  throw SchemaError("unknown signal kind '" + name + "'");
}

std::string to_string(TransitionSpeed speed) {
  switch (speed) {
    case TransitionSpeed::Fast: return "fast";
    case TransitionSpeed::Slow: return "slow";
    case TransitionSpeed::Full: return "full";
  }
  return "full";
}

std::vector<double> sample_times(double horizon) {
  const double steps = horizon / kSampleStep;
  const auto n = static_cast<long>(std::llround(steps));
  if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-9) {
    throw DomainError("horizon must be a positive multiple of 5 s");
  }
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) t[static_cast<std::size_t>(k)] = kSampleStep * static_cast<double>(k);
  return t;
}

void validate(const Signal& signal) {
  if (signal.values.size() != signal.times.size() || signal.values.size() < 2) {
    throw DomainError("signal '" + signal.id + "' needs matching times/values of length >= 2");
  }
  for (std::size_t k = 0; k < signal.times.size(); ++k) {
    if (std::abs(signal.times[k] - kSampleStep * static_cast<double>(k)) > 1e-9) {
      throw DomainError("signal '" + signal.id + "' is not sampled on the 5 s grid");
    }
    const double v = signal.values[k];
    if (!(v >= kOvenMin - 1e-9 && v <= kOvenMax + 1e-9)) {
      throw DomainError("signal '" + signal.id + "' leaves the operating range");
    }
  }
}

// ---------------------------------------------------------------------------

Signal synth_aprbs(const AprbsParams& p, std::string id) {
  if (!(p.T_max > p.T_min)) throw DomainError("APRBS needs T_max > T_min");
  if (!(p.horizon >= 4.0 * p.t_hold)) throw DomainError("APRBS needs horizon >= 4 t_hold");
  Rng rng(p.seed);

  const double band = (p.T_max - p.T_min) / 4.0;
  std::array<double, 4> levels{};
  for (long attempt = 0;; ++attempt) {
    if (attempt > kMaxRejections) throw DomainError("APRBS level margin unattainable");
    for (int i = 0; i < 4; ++i) levels[i] = rng.uniform(p.T_min + i * band, p.T_min + (i + 1) * band);
    rng.shuffle(std::span<double>(levels));
    bool ok = true;
    for (int i = 1; i < 4; ++i) ok = ok && std::abs(levels[i] - levels[i - 1]) >= p.T_margin;
    if (ok) break;
  }

  const auto slots = static_cast<std::uint64_t>(std::llround(p.horizon / kSampleStep)) + 1;
  std::array<double, 4> switches{};
  for (long attempt = 0;; ++attempt) {
    if (attempt > kMaxRejections) throw DomainError("APRBS hold time unattainable");
    for (auto& t : switches) t = kSampleStep * static_cast<double>(rng.below(slots));
    std::sort(switches.begin(), switches.end());
    bool ok = p.horizon - switches[3] >= p.t_hold;
    for (int i = 1; i < 4; ++i) ok = ok && switches[i] - switches[i - 1] >= p.t_hold;
    if (ok) break;
  }

  Signal s = make(id.empty() ? default_id("ap", p.seed) : std::move(id), SignalKind::Aprbs,
                  p.horizon);
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (int i = 0; i < 4; ++i) {
      if (s.times[k] >= switches[i]) s.values[k] = levels[i];
    }
  }
  s.meta = {{"seed", p.seed},       {"horizon", p.horizon}, {"T_min", p.T_min},
            {"T_max", p.T_max},     {"t_hold", p.t_hold},   {"T_margin", p.T_margin},
            {"T_start", kOvenMin},  {"levels", levels},     {"switch_times", switches}};
  return s;
}

Signal aprbs_to_sinaprbs(const Signal& aprbs, TransitionSpeed speed, std::string id) {
  if (aprbs.kind != SignalKind::Aprbs) throw DomainError("sinAPRBS transform needs an APRBS input");
  const auto levels = aprbs.meta.at("levels").get<std::vector<double>>();
  const auto switches = aprbs.meta.at("switch_times").get<std::vector<double>>();
  const auto seed = aprbs.meta.at("seed").get<std::uint64_t>();
  const double horizon = aprbs.horizon();

  double f_lo = 0.001, f_hi = 0.01;
  const double mid = 0.5 * (f_lo + f_hi);
  if (speed == TransitionSpeed::Fast) f_lo = mid;
  if (speed == TransitionSpeed::Slow) f_hi = mid;

  Rng rng(derive_seed(seed, kTransitionStream));
  std::vector<double> freqs, durations;
  bool shrunk = false;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double f = f_lo + rng.uniform() * (f_hi - f_lo);
    double d = 1.0 / (4.0 * f);
    const double plateau = (i + 1 < switches.size() ? switches[i + 1] : horizon) - switches[i];
    if (d > plateau) {
      d = plateau;
      shrunk = true;
    }
    freqs.push_back(f);
    durations.push_back(d);
  }

  const char suffix = speed == TransitionSpeed::Fast ? 'f' : (speed == TransitionSpeed::Slow ? 's' : 'q');
  Signal s = aprbs;
  s.id = id.empty() ? aprbs.id + suffix : std::move(id);
  s.kind = SignalKind::SinAprbs;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double t = s.times[k];
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (t < switches[i] || t >= switches[i] + durations[i]) continue;
      const double from = i == 0 ? kOvenMin : levels[i - 1];
      const double amplitude = levels[i] - from;
      const double phase = 0.5 * std::numbers::pi * (t - switches[i]) / durations[i];
      s.values[k] = from + amplitude * std::sin(phase);
    }
  }
  s.meta["parent"] = aprbs.id;
  s.meta["speed"] = to_string(speed);
  s.meta["frequencies"] = freqs;
  s.meta["transition_durations"] = durations;
  s.meta["transition_shrunk"] = shrunk;
  return s;
}

std::vector<double> schroeder_phases(int m) {
  if (m < 1) throw DomainError("multisine needs m >= 1");
  std::vector<double> phi(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    phi[static_cast<std::size_t>(j - 1)] =
        -static_cast<double>(j) * static_cast<double>(j - 1) * std::numbers::pi / static_cast<double>(m);
  }
  return phi;
}

Signal synth_multisine(const MultisineParams& p, std::string id) {
  if (p.m < 1) throw DomainError("multisine needs m >= 1");
  Rng rng(p.seed);
  const double f0 = rng.uniform(p.f0_range.first, p.f0_range.second);
  const double A = rng.uniform(p.amplitude_range.first, p.amplitude_range.second);
  const double c = rng.uniform(p.offset_range.first, p.offset_range.second);
  std::vector<double> phases;
  if (p.schroeder) {
    phases = schroeder_phases(p.m);
  } else {
    for (int j = 0; j < p.m; ++j) phases.push_back(rng.uniform(0.0, 10.0));
  }
  std::vector<int> harmonics(static_cast<std::size_t>(p.m));
  for (int j = 0; j < p.m; ++j) harmonics[static_cast<std::size_t>(j)] = j + 1;

  const auto kind = p.schroeder ? SignalKind::SchroederMultisine : SignalKind::Multisine;
  Signal s = make(id.empty() ? default_id(p.schroeder ? "sms" : "ms", p.seed) : std::move(id), kind,
                  p.horizon);
  std::size_t clipped = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    double u = c;
    for (int j = 0; j < p.m; ++j) {
      u += A * std::cos(2.0 * std::numbers::pi * harmonics[static_cast<std::size_t>(j)] * f0 * s.times[k] +
                        phases[static_cast<std::size_t>(j)]);
    }
    if (u < kOvenMin || u > kOvenMax) ++clipped;
    s.values[k] = std::clamp(u, kOvenMin, kOvenMax);
  }
  s.meta = {{"seed", p.seed},
            {"m", p.m},
            {"schroeder", p.schroeder},
            {"f0_range", {p.f0_range.first, p.f0_range.second}},
            {"amplitude_range", {p.amplitude_range.first, p.amplitude_range.second}},
            {"offset_range", {p.offset_range.first, p.offset_range.second}},
            {"horizon", p.horizon},
            {"f0", f0},
            {"amplitude", A},
            {"offset", c},
            {"harmonics", harmonics},
            {"phases", phases},
            {"clip_fraction", static_cast<double>(clipped) / static_cast<double>(s.size())}};
  return s;
}

Signal synth_step(double level, double t_step, double horizon, std::string id) {
  if (!(level >= kOvenMin && level <= kOvenMax)) throw DomainError("step level outside operating range");
  Signal s = make(id.empty() ? "step" : std::move(id), SignalKind::Step, horizon);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.times[k] >= t_step) s.values[k] = level;
  }
  s.meta = {{"level", level}, {"t_step", t_step}, {"horizon", horizon}};
  return s;
}

Signal synth_sine(double amplitude, double frequency, double offset, double horizon, std::string id) {
  if (offset - std::abs(amplitude) < kOvenMin || offset + std::abs(amplitude) > kOvenMax) {
    throw DomainError("sine leaves the operating range");
  }
  Signal s = make(id.empty() ? "sine" : std::move(id), SignalKind::Sine, horizon);
  for (std::size_t k = 0; k < s.size(); ++k) {
    s.values[k] = offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency * s.times[k]);
  }
  s.meta = {{"amplitude", amplitude}, {"frequency", frequency}, {"offset", offset}, {"horizon", horizon}};
  return s;
}

Signal concat_repeat(const Signal& signal, int repeats) {
  if (repeats < 2) throw DomainError("concat_repeat needs repeats >= 2");
  validate(signal);
  const std::size_t period = signal.size() - 1;
  Signal s = make(signal.id + "x" + std::to_string(repeats), SignalKind::Concat,
                  signal.horizon() * repeats);
  for (std::size_t k = 0; k < s.size(); ++k) s.values[k] = signal.values[k % period];
  s.meta = {{"source", signal.id},
            {"repeats", repeats},
            {"source_kind", to_string(signal.kind)},
            {"source_meta", signal.meta}};
  return s;
}

Signal regenerate(const Signal& signal) {
  const auto& m = signal.meta;
  switch (signal.kind) {
    case SignalKind::Aprbs:
      return synth_aprbs(aprbs_params_from(m), signal.id);
    case SignalKind::SinAprbs: {
      const auto parent = synth_aprbs(aprbs_params_from(m), m.at("parent").get<std::string>());
      return aprbs_to_sinaprbs(parent, speed_from_string(m.at("speed").get<std::string>()), signal.id);
    }
    case SignalKind::Multisine:
    case SignalKind::SchroederMultisine: {
      MultisineParams p;
      p.seed = m.at("seed").get<std::uint64_t>();
      p.m = m.at("m").get<int>();
      p.schroeder = m.at("schroeder").get<bool>();
      p.f0_range = {m.at("f0_range")[0].get<double>(), m.at("f0_range")[1].get<double>()};
      p.amplitude_range = {m.at("amplitude_range")[0].get<double>(), m.at("amplitude_range")[1].get<double>()};
      p.offset_range = {m.at("offset_range")[0].get<double>(), m.at("offset_range")[1].get<double>()};
      p.horizon = m.at("horizon").get<double>();
      return synth_multisine(p, signal.id);
    }
    case SignalKind::Step:
      return synth_step(m.at("level").get<double>(), m.at("t_step").get<double>(),
                        m.at("horizon").get<double>(), signal.id);
    case SignalKind::Sine:
      return synth_sine(m.at("amplitude").get<double>(), m.at("frequency").get<double>(),
                        m.at("offset").get<double>(), m.at("horizon").get<double>(), signal.id);
    case SignalKind::Concat: {
      Signal source;
      source.id = m.at("source").get<std::string>();
      source.kind = kind_from_string(m.at("source_kind").get<std::string>());
      source.meta = m.at("source_meta");
      auto s = concat_repeat(regenerate(source), m.at("repeats").get<int>());
      s.id = signal.id;
      return s;
    }
  }
  throw SchemaError("cannot regenerate signal '" + signal.id + "'");
}

// ---------------------------------------------------------------------------

void write_signal(const std::filesystem::path& dir, const Signal& signal) {
  csv::Table t;
  t.header = {"t_s", "T_oven_K"};
  for (std::size_t k = 0; k < signal.size(); ++k) {
    t.rows.push_back({csv::format_double(signal.times[k]), csv::format_double(signal.values[k])});
  }
  csv::write(dir / (signal.id + ".csv"), t);

  nlohmann::json j;
  j["id"] = signal.id;
  j["kind"] = to_string(signal.kind);
  if (signal.meta.contains("seed")) j["seed"] = signal.meta["seed"];
  j["params"] = signal.meta;
  csv::write_text(dir / (signal.id + ".json"), j.dump(2) + "\n");
}

Signal read_signal(const std::filesystem::path& dir, const std::string& id) {
  Signal s;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(dir / (id + ".json")));
    s.id = j.at("id").get<std::string>();
    s.kind = kind_from_string(j.at("kind").get<std::string>());
    s.meta = j.at("params");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("bad signal metadata for '" + id + "': " + e.what());
  }
  const auto t = csv::read(dir / (id + ".csv"));
  s.times = t.numeric_column("t_s");
  s.values = t.numeric_column("T_oven_K");
  validate(s);
  return s;
}

}  // namespace twinforge::signals
