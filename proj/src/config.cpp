#include "amc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "amc/report.hpp"

namespace amc {

ConfigError::ConfigError(std::string source, int line, std::string key, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         (key.empty() ? std::string() : ": key '" + key + "'") + ": " + message),
      source_(std::move(source)), line_(line), key_(std::move(key)) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& is, const std::string& source) {
  ConfigFile file;
  file.source_ = source;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "", "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(source, line_no, "", "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "", "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(source, line_no, "", "missing key before '='");
    const std::string full = section.empty() ? key : section + "." + key;
    if (file.entries_.count(full)) throw ConfigError(source, line_no, full, "duplicate key");
    file.entries_[full] = {trim(std::string_view(line).substr(eq + 1)), line_no};
  }
  return file;
}

namespace {

// Typed readers keyed by "section.key"; each consumes its entry so leftovers
// can be reported as unknown keys.
class Reader {
 public:
  explicit Reader(const ConfigFile& file) : file_(file), pending_(file.entries()) {}

  template <typename F>
  void with(const std::string& key, F&& apply) {
    auto it = pending_.find(key);
    if (it == pending_.end()) return;
    const auto entry = it->second;
    pending_.erase(it);
    try {
      apply(entry.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(file_.source(), entry.line, key, e.what());
    }
  }

  void real(const std::string& key, double& out) {
    with(key, [&](const std::string& v) { out = to_real(v); });
  }
  void integer(const std::string& key, int& out) {
    with(key, [&](const std::string& v) { out = static_cast<int>(to_int(v)); });
  }
  void integer64(const std::string& key, std::int64_t& out) {
    with(key, [&](const std::string& v) { out = to_int(v); });
  }
  void unsigned64(const std::string& key, std::uint64_t& out) {
    with(key, [&](const std::string& v) { out = to_uint(v); });
  }
  void boolean(const std::string& key, bool& out) {
    with(key, [&](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") out = true;
      else if (v == "false" || v == "0" || v == "no") out = false;
      else throw std::invalid_argument("expected a boolean, got '" + v + "'");
    });
  }

  void reject_leftovers() const {
    if (pending_.empty()) return;
    const auto first = std::min_element(pending_.begin(), pending_.end(), [](const auto& a, const auto& b) {
      return a.second.line < b.second.line;
    });
    throw ConfigError(file_.source(), first->second.line, first->first, "unknown key");
  }

  static double to_real(const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw std::invalid_argument("expected a number, got '" + v + "'");
    return out;
  }
  static std::int64_t to_int(const std::string& v) {
    std::int64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw std::invalid_argument("expected an integer, got '" + v + "'");
    return out;
  }
  static std::uint64_t to_uint(const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
    return out;
  }

 private:
  const ConfigFile& file_;
  std::map<std::string, ConfigFile::Entry> pending_;
};

std::vector<double> real_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(Reader::to_real(item));
  return out;
}

// Accepts "1,2,5" and inclusive ranges "1-10".
std::vector<std::uint64_t> seed_list(const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(v)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(Reader::to_uint(item));
      continue;
    }
    const auto lo = Reader::to_uint(trim(item.substr(0, dash)));
    const auto hi = Reader::to_uint(trim(item.substr(dash + 1)));
    if (hi < lo) throw std::invalid_argument("descending seed range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

}  // namespace

ScenarioConfig scenario_from(const ConfigFile& file) {
  ScenarioConfig c;
  Reader r(file);

  r.with("scenario.label", [&](const std::string& v) { c.label = v; });
  r.unsigned64("scenario.seed", c.seed);
  r.integer64("scenario.episode_length", c.episode_length);
  r.integer("scenario.max_divergences", c.max_divergences);

  auto& ch = c.channel;
  r.with("channel.mode", [&](const std::string& v) {
    if (v == "gauss_markov") ch.mode = ChannelMode::gauss_markov;
    else if (v == "mimo") ch.mode = ChannelMode::mimo;
    else throw std::invalid_argument("expected gauss_markov or mimo, got '" + v + "'");
  });
  r.integer("channel.tx_antennas", ch.tx_antennas);
  r.integer("channel.rx_antennas", ch.rx_antennas);
  r.integer("channel.rank", ch.rank);
  r.real("channel.carrier_hz", ch.carrier_hz);
  r.real("channel.speed_kmh", ch.speed_kmh);
  r.real("channel.tti_s", ch.tti_s);
  r.real("channel.sounding_period_s", ch.sounding_period_s);
  r.real("channel.mean_sinr_db", ch.mean_sinr_db);
  r.real("channel.sinr_std_db", ch.sinr_std_db);
  r.real("channel.noise_power", ch.noise_power);
  r.real("channel.tx_power_dbm", ch.tx_power_dbm);
  r.real("channel.pathloss_db", ch.pathloss_db);

  std::vector<double> se(c.mcs.se_values().begin(), c.mcs.se_values().end());
  std::vector<double> thresholds;
  double first = -6.5, spacing = 0.75, slope = c.mcs.slope();
  r.with("mcs.se", [&](const std::string& v) { se = real_list(v); });
  r.with("mcs.thresholds_db", [&](const std::string& v) { thresholds = real_list(v); });
  r.real("mcs.threshold_first_db", first);
  r.real("mcs.threshold_spacing_db", spacing);
  r.real("mcs.slope_per_db", slope);

  r.integer("cqi.count", c.cqi.count);
  r.real("cqi.floor_db", c.cqi.floor_db);
  r.real("cqi.step_db", c.cqi.step_db);

  auto& ag = c.agent;
  r.real("olla.initial_offset", ag.olla.offset);
  r.real("olla.step", ag.olla.step);
  r.real("olla.target_bler", ag.olla.target_bler);

  r.integer("agent.retrain_period", ag.retrain_period);
  r.with("agent.buffer_capacity", [&](const std::string& v) {
    const auto u = Reader::to_int(v);
    if (u < 1) throw std::invalid_argument("buffer capacity must be >= 1");
    ag.buffer_capacity = static_cast<std::size_t>(u);
  });
  r.boolean("agent.train_every_warmup_tti", ag.train_every_warmup_tti);
  r.with("agent.hidden", [&](const std::string& v) {
    ag.hidden.clear();
    for (const auto& item : split_list(v)) ag.hidden.push_back(static_cast<int>(Reader::to_int(item)));
  });
  r.integer("agent.steps", ag.fit.steps);
  r.integer("agent.batch", ag.fit.batch);
  r.real("agent.lr", ag.fit.adam.lr);
  r.real("agent.beta1", ag.fit.adam.beta1);
  r.real("agent.beta2", ag.fit.adam.beta2);
  r.real("agent.adam_eps", ag.fit.adam.eps);
  r.real("agent.epsilon", ag.epsilon);
  r.with("agent.subsample_rate", [&](const std::string& v) {
    if (v != "auto") c.subsample_rate = Reader::to_real(v);
  });

  r.with("sweep.speeds_kmh", [&](const std::string& v) { c.sweep.speeds_kmh = real_list(v); });
  r.with("sweep.ranks", [&](const std::string& v) {
    c.sweep.ranks.clear();
    for (const auto& item : split_list(v)) c.sweep.ranks.push_back(static_cast<int>(Reader::to_int(item)));
  });
  r.with("sweep.seeds", [&](const std::string& v) { c.sweep.seeds = seed_list(v); });
  r.with("sweep.agents", [&](const std::string& v) {
    c.sweep.agents.clear();
    for (const auto& item : split_list(v)) c.sweep.agents.push_back(parse_agent_kind(item));
  });

  r.reject_leftovers();

  try {
    if (thresholds.empty())
      thresholds = McsTable::linear_thresholds(static_cast<int>(se.size()), first, spacing);
    c.mcs = McsTable(se, thresholds, slope);
    c.validate();
    for (int rank : c.sweep.ranks) grid_cell(c, 0.0, rank).channel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(file.source(), 0, "", e.what());
  }
  return c;
}

ScenarioConfig parse_scenario(std::istream& is, const std::string& source) {
  return scenario_from(ConfigFile::parse(is, source));
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  return parse_scenario(in, path.string());
}

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

template <typename T>
std::string join(std::span<const T> items) {
  return join(std::vector<T>(items.begin(), items.end()), [](double x) { return format_exact(x); });
}

}  // namespace

std::string echo_scenario(const ScenarioConfig& c) {
  std::ostringstream os;
  const auto& ch = c.channel;
  const auto& ag = c.agent;
  os << "# effective configuration\n";
  os << "[scenario]\n"
     << "label = " << c.label << '\n'
     << "seed = " << c.seed << '\n'
     << "episode_length = " << c.episode_length << '\n'
     << "max_divergences = " << c.max_divergences << "\n\n";
  os << "[channel]\n"
     << "mode = " << (ch.mode == ChannelMode::mimo ? "mimo" : "gauss_markov") << '\n'
     << "tx_antennas = " << ch.tx_antennas << '\n'
     << "rx_antennas = " << ch.rx_antennas << '\n'
     << "rank = " << ch.rank << '\n'
     << "carrier_hz = " << format_exact(ch.carrier_hz) << '\n'
     << "speed_kmh = " << format_exact(ch.speed_kmh) << '\n'
     << "tti_s = " << format_exact(ch.tti_s) << '\n'
     << "sounding_period_s = " << format_exact(ch.sounding_period_s) << '\n'
     << "mean_sinr_db = " << format_exact(ch.mean_sinr_db) << '\n'
     << "sinr_std_db = " << format_exact(ch.sinr_std_db) << '\n'
     << "noise_power = " << format_exact(ch.noise_power) << '\n'
     << "tx_power_dbm = " << format_exact(ch.tx_power_dbm) << '\n'
     << "pathloss_db = " << format_exact(ch.pathloss_db) << "\n\n";
  os << "[mcs]\n"
     << "se = " << join(c.mcs.se_values()) << '\n'
     << "thresholds_db = " << join(c.mcs.thresholds_db()) << '\n'
     << "slope_per_db = " << format_exact(c.mcs.slope()) << "\n\n";
  os << "[cqi]\n"
     << "count = " << c.cqi.count << '\n'
     << "floor_db = " << format_exact(c.cqi.floor_db) << '\n'
     << "step_db = " << format_exact(c.cqi.step_db) << "\n\n";
  os << "[olla]\n"
     << "initial_offset = " << format_exact(ag.olla.offset) << '\n'
     << "step = " << format_exact(ag.olla.step) << '\n'
     << "target_bler = " << format_exact(ag.olla.target_bler) << "\n\n";
  os << "[agent]\n"
     << "retrain_period = " << ag.retrain_period << '\n'
     << "buffer_capacity = " << ag.buffer_capacity << '\n'
     << "train_every_warmup_tti = " << (ag.train_every_warmup_tti ? "true" : "false") << '\n'
     << "hidden = " << join(ag.hidden, [](int h) { return std::to_string(h); }) << '\n'
     << "steps = " << ag.fit.steps << '\n'
     << "batch = " << ag.fit.batch << '\n'
     << "lr = " << format_exact(ag.fit.adam.lr) << '\n'
     << "beta1 = " << format_exact(ag.fit.adam.beta1) << '\n'
     << "beta2 = " << format_exact(ag.fit.adam.beta2) << '\n'
     << "adam_eps = " << format_exact(ag.fit.adam.eps) << '\n'
     << "epsilon = " << format_exact(ag.epsilon) << '\n'
     << "subsample_rate = " << (c.subsample_rate ? format_exact(*c.subsample_rate) : "auto") << "\n\n";
  os << "[sweep]\n"
     << "speeds_kmh = " << join(c.sweep.speeds_kmh, [](double v) { return format_exact(v); }) << '\n'
     << "ranks = " << join(c.sweep.ranks, [](int v) { return std::to_string(v); }) << '\n'
     << "seeds = " << join(c.sweep.seeds, [](std::uint64_t v) { return std::to_string(v); }) << '\n'
     << "agents = " << join(c.sweep.agents, [](AgentKind k) { return std::string(to_string(k)); }) << '\n';
  return os.str();
}

}  // namespace amc
