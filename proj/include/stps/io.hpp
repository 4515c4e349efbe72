#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "stps/errors.hpp"
#include "stps/experiment.hpp"
#include "stps/learner.hpp"
#include "stps/secrecy.hpp"

namespace stps {

namespace fs = std::filesystem;

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("malformed number '" + std::string(s) + "'");
  }
  return v;
}

inline std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("malformed integer '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// ---- traces ----------------------------------------------------------------

inline constexpr std::string_view kTraceHeader =
    "slot,agent,policy_index,policy,config_index,config,s,q,c,delta,w_s,w_q,w_c,utility,"
    "network_utility,policy_reward,config_reward,explored";

/// One row per (slot, agent). `agent` is 1-based. Policy and config names are
/// informational; the index columns are authoritative when parsing.
inline std::string trace_to_csv(const EpisodeTrace& trace, const std::vector<AgentOptions>& options) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& rec : trace.slots) {
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      const auto& step = rec.agents[i];
      const auto& u = rec.utility.agents.at(i);
      const auto& opt = options.at(i);
      os << rec.slot << ',' << (i + 1) << ',' << step.action.policy << ','
         << to_string(opt.policies.at(step.action.policy)) << ',' << step.action.config << ','
         << opt.configs.at(step.action.config).label() << ',' << format_double(u.s) << ','
         << format_double(u.q) << ',' << format_double(u.c) << ',' << format_double(u.delta) << ','
         << format_double(u.weights.security) << ',' << format_double(u.weights.qos) << ','
         << format_double(u.weights.cost) << ',' << format_double(u.utility) << ','
         << format_double(rec.utility.network) << ',' << format_double(step.policy_reward) << ','
         << format_double(step.config_reward) << ',' << (step.explored ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

inline EpisodeTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw IoError("trace CSV has an unexpected header");
  EpisodeTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 18) throw IoError("trace CSV line " + std::to_string(line_no) + ": expected 18 fields");
    try {
      const std::size_t slot = parse_size(f[0]);
      const std::size_t agent = parse_size(f[1]);
      if (agent < 1) throw IoError("agent ids start at 1");
      if (trace.slots.empty() || trace.slots.back().slot != slot) {
        SlotRecord rec;
        rec.slot = slot;
        trace.slots.push_back(rec);
      }
      auto& rec = trace.slots.back();
      if (agent != rec.agents.size() + 1) throw IoError("agents out of order");
      AgentStep step;
      step.action = {parse_size(f[2]), parse_size(f[4])};
      AgentUtility u;
      u.s = parse_double(f[6]);
      u.q = parse_double(f[7]);
      u.c = parse_double(f[8]);
      u.delta = parse_double(f[9]);
      u.weights = {parse_double(f[10]), parse_double(f[11]), parse_double(f[12])};
      u.utility = parse_double(f[13]);
      rec.utility.network = parse_double(f[14]);
      step.policy_reward = parse_double(f[15]);
      step.config_reward = parse_double(f[16]);
      step.explored = f[17] == "1";
      rec.agents.push_back(step);
      rec.utility.agents.push_back(u);
    } catch (const IoError& e) {
      throw IoError("trace CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

// Per-slot network utility alongside each agent's utility.
inline std::string network_series_csv(const EpisodeTrace& trace) {
  std::ostringstream os;
  os << "slot,network_utility";
  const std::size_t agents = trace.slots.empty() ? 0 : trace.slots.front().agents.size();
  for (std::size_t i = 0; i < agents; ++i) os << ",utility_agent" << (i + 1);
  os << '\n';
  for (const auto& r : trace.slots) {
    os << r.slot << ',' << format_double(r.utility.network);
    for (const auto& a : r.utility.agents) os << ',' << format_double(a.utility);
    os << '\n';
  }
  return os.str();
}

// ---- Q-tables ----------------------------------------------------------------

inline std::vector<std::string> policy_action_names(const QTables& t, const std::vector<AgentOptions>& options,
                                                    std::size_t learner) {
  std::vector<std::string> names;
  if (t.mode == DecisionMode::Individual) {
    for (auto p : options.at(learner).policies) names.emplace_back(to_string(p));
    return names;
  }
  std::vector<std::size_t> radix;
  for (const auto& o : options) radix.push_back(o.policies.size());
  const TupleIndexer idx(radix);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const auto d = idx.decode(a);
    std::string s;
    for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "+" : "") + std::string(to_string(options[i].policies[d[i]]));
    names.push_back(s);
  }
  return names;
}

inline std::vector<std::string> config_action_names(const QTables& t, const std::vector<AgentOptions>& options,
                                                    std::size_t learner) {
  std::vector<std::string> names;
  if (t.mode == DecisionMode::Individual) {
    for (const auto& c : options.at(learner).configs) names.push_back(c.label());
    return names;
  }
  std::vector<std::size_t> radix;
  for (const auto& o : options) radix.push_back(o.configs.size());
  const TupleIndexer idx(radix);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const auto d = idx.decode(a);
    std::string s;
    for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "+" : "") + options[i].configs[d[i]].label();
    names.push_back(s);
  }
  return names;
}

/// Policy-stage row ("last_state"), then a second header over configuration
/// actions followed by one row per policy action.
inline std::string qtable_to_csv(const QTables& t, const std::vector<AgentOptions>& options, std::size_t learner) {
  const auto& q = t.tables.at(learner);
  const auto pn = policy_action_names(t, options, learner);
  const auto cn = config_action_names(t, options, learner);
  std::ostringstream os;
  os << "state";
  for (const auto& n : pn) os << ',' << n;
  os << "\nlast_state";
  for (double v : q.policy) os << ',' << format_double(v);
  os << "\nstate";
  for (const auto& n : cn) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < q.policy_actions; ++k) {
    os << pn[k];
    for (double v : q.config_row(k)) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

// Values only; visit counts are not stored in the CSV.
inline QTable qtable_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  if (rows.size() < 3 || rows[0][0] != "state" || rows[1][0] != "last_state" || rows[2][0] != "state") {
    throw IoError("Q-table CSV has an unexpected layout");
  }
  const std::size_t n = rows[0].size() - 1;
  const std::size_t m = rows[2].size() - 1;
  if (rows.size() != 3 + n) throw IoError("Q-table CSV has the wrong number of configuration rows");
  QTable q(n, m);
  for (std::size_t k = 0; k < n; ++k) q.policy[k] = parse_double(rows[1].at(k + 1));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c = 0; c < m; ++c) q.config_value(k, c) = parse_double(rows[3 + k].at(c + 1));
  }
  return q;
}

// ---- relative indicators ---------------------------------------------------

inline std::string report_to_csv(const RelativeIndicatorReport& r) {
  std::ostringstream os;
  os << "agent,baseline,metric,relative_percent,seeds\n";
  for (const auto& c : r.cells) {
    os << (c.agent + 1) << ',' << to_string(c.baseline) << ',' << to_string(c.metric) << ','
       << (c.percent ? format_double(*c.percent) : std::string("undefined")) << ',' << c.seeds << '\n';
  }
  return os.str();
}

inline RelativeIndicatorReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "agent,baseline,metric,relative_percent,seeds") throw IoError("unexpected indicator header");
  RelativeIndicatorReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw IoError("indicator row needs 5 fields");
    IndicatorCell c;
    c.agent = parse_size(f[0]) - 1;
    const auto p = parse_policy(f[1]);
    if (!p) throw IoError("unknown baseline policy " + f[1]);
    c.baseline = *p;
    bool found = false;
    for (auto m : kAllMetrics) {
      if (to_string(m) == f[2]) {
        c.metric = m;
        found = true;
      }
    }
    if (!found) throw IoError("unknown metric " + f[2]);
    if (f[3] != "undefined") c.percent = parse_double(f[3]);
    c.seeds = parse_size(f[4]);
    r.cells.push_back(c);
  }
  return r;
}

// ---- secrecy map -------------------------------------------------------------

inline std::string secrecy_map_to_csv(const SecrecyMap& map) {
  std::ostringstream os;
  os << "x,y,agent_id,ergodic_secrecy_capacity,std_error\n";
  for (std::size_t i = 0; i < map.capacity.size(); ++i) {
    for (std::size_t p = 0; p < map.points.size(); ++p) {
      os << format_double(map.points[p].x) << ',' << format_double(map.points[p].y) << ',' << (i + 1)
         << ',' << format_double(map.capacity[i][p]) << ',' << format_double(map.std_error[i][p]) << '\n';
    }
  }
  return os.str();
}

// ---- manifest ------------------------------------------------------------------

struct ManifestEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Manifest {
  std::vector<ManifestEntry> files;
};

class OutputWriter {
 public:
  explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    manifest_.files.push_back({name, sha256_hex(content), content.size()});
  }

  // Writes manifest.json and returns the manifest it describes.
  Manifest finish() {
    nlohmann::json j;
    j["files"] = nlohmann::json::array();
    for (const auto& f : manifest_.files) {
      j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    }
    write_file(dir_ / "manifest.json", j.dump(2) + "\n");
    return manifest_;
  }

  [[nodiscard]] const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  Manifest manifest_;
};

inline Manifest read_manifest(const fs::path& dir) {
  const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  Manifest m;
  for (const auto& f : j.at("files")) {
    m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                       f.at("bytes").get<std::uintmax_t>()});
  }
  return m;
}

// Paths whose content no longer matches the recorded checksum.
inline std::vector<std::string> verify_manifest(const fs::path& dir) {
  std::vector<std::string> bad;
  for (const auto& f : read_manifest(dir).files) {
    std::string content;
    try {
      content = read_file(dir / f.path);
    } catch (const IoError&) {
      bad.push_back(f.path);
      continue;
    }
    if (sha256_hex(content) != f.sha256) bad.push_back(f.path);
  }
  return bad;
}

inline std::string baseline_trace_name(PlsPolicy p) {
  std::string n(to_string(p));
  for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return "trace_baseline_" + n + ".csv";
}

inline std::string metadata_json(const RunOutput& run) {
  const auto& s = run.scenario;
  nlohmann::json j;
  j["tool"] = "stps";
  j["version"] = "1.0.0";
  j["seed"] = run.metadata.seed;
  j["mode"] = std::string(to_string(run.metadata.mode));
  j["preset"] = run.metadata.preset;
  j["slots"] = s.slots;
  j["grid_resolution"] = s.grid_resolution;
  j["mc_samples"] = s.mc_samples;
  j["cost_power"] = std::string(to_string(s.cost_power));
  j["enforce_equal_msg_power"] = s.enforce_equal_msg_power;
  const auto& hp = s.hyperparams(run.metadata.mode);
  j["hyperparams"] = {{"discount", hp.discount},
                      {"learning_rate", hp.learning_rate},
                      {"epsilon", hp.epsilon},
                      {"episodes", hp.episodes}};
  nlohmann::json visits = nlohmann::json::array();
  for (const auto& t : run.tables.tables) visits.push_back(t.total_visits());
  j["q_updates"] = visits;
  j["timings_seconds"] = {{"secrecy", run.metadata.secrecy_seconds},
                          {"training", run.metadata.training_seconds},
                          {"evaluation", run.metadata.evaluation_seconds}};
  j["mean_network_utility"] = mean_network_utility(run.adaptive);
  return j.dump(2) + "\n";
}

/// Writes every artifact of one run into `dir` and returns the manifest.
inline Manifest emit_outputs(const RunOutput& run, const fs::path& dir) {
  OutputWriter w(dir);
  const auto options = run.scenario.options();
  w.write("trace_adaptive.csv", trace_to_csv(run.adaptive, options));
  w.write("network_utility.csv", network_series_csv(run.adaptive));
  for (const auto& [p, trace] : run.baselines) w.write(baseline_trace_name(p), trace_to_csv(trace, options));
  if (run.tables.mode == DecisionMode::Individual) {
    for (std::size_t l = 0; l < run.tables.tables.size(); ++l) {
      w.write("qtable_agent" + std::to_string(l + 1) + ".csv", qtable_to_csv(run.tables, options, l));
    }
  } else {
    w.write("qtable_joint.csv", qtable_to_csv(run.tables, options, 0));
  }
  w.write("relative_indicator.csv", report_to_csv(run.report));
  w.write("metadata.json", metadata_json(run));
  return w.finish();
}

/// Rebuilds the indicator report from the traces saved in a run directory.
inline RelativeIndicatorReport report_from_directory(const fs::path& dir) {
  const auto adaptive = trace_from_csv(read_file(dir / "trace_adaptive.csv"));
  std::map<PlsPolicy, EpisodeTrace> baselines;
  for (auto p : kAllPolicies) {
    const auto path = dir / baseline_trace_name(p);
    if (fs::exists(path)) baselines[p] = trace_from_csv(read_file(path));
  }
  if (baselines.empty()) throw IoError("no baseline traces in " + dir.string());
  return build_report(adaptive, baselines);
}

}  // namespace stps
