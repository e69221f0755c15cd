#include "nvqpe/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nvqpe/errors.hpp"

namespace nvqpe {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any key it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <class Int>
    requires std::is_integral_v<Int>
  void read(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0)
          out = v->get<Int>();
        else
          throw ConfigError(field(key), "expected a non-negative integer");
      } else {
        out = v->get<Int>();
      }
    }
  }

  template <class Int>
  void read(const std::string& key, std::optional<Int>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      Int tmp{};
      seen_.erase(key);
      read(key, tmp);
      out = tmp;
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class T>
  void read(const std::string& key, std::vector<T>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        const std::string where = field(key) + "[" + std::to_string(i) + "]";
        if constexpr (std::is_same_v<T, std::string>) {
          if (!e.is_string()) throw ConfigError(where, "expected a string");
        } else if constexpr (std::is_integral_v<T>) {
          if (!e.is_number_integer()) throw ConfigError(where, "expected an integer");
        } else {
          if (!e.is_number()) throw ConfigError(where, "expected a number");
        }
        out.push_back(e.get<T>());
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  ObjectReader root(doc, "");

  if (const json* p = root.find("protocol")) {
    ObjectReader r(*p, "protocol");
    auto& s = cfg.protocol;
    r.read("mode", s.mode);
    r.read("K", s.K);
    r.read("G", s.G);
    r.read("F", s.F);
    r.read("R", s.R);
    r.read("tau0_ns", s.tau0_ns);
    r.read("t2_star_us", s.t2_star_us);
    r.read("overhead_us", s.overhead_us);
    r.finish();
  }

  if (const json* runs = root.find("runs")) {
    require(runs->is_array(), "runs", "expected an array");
    for (std::size_t i = 0; i < runs->size(); ++i) {
      ObjectReader r((*runs)[i], "runs[" + std::to_string(i) + "]");
      RunSection run;
      r.read("label", run.label);
      r.read("modes", run.modes);
      r.read("K", run.K);
      r.read("G", run.G);
      r.read("F", run.F);
      r.read("R", run.R);
      r.read("axis", run.axis);
      r.read("values", run.values);
      r.finish();
      cfg.runs.push_back(std::move(run));
    }
  }

  if (const json* p = root.find("photodynamics")) {
    ObjectReader r(*p, "photodynamics");
    auto& s = cfg.photodynamics;
    r.read("gamma_rad_MHz", s.gamma_rad_MHz);
    r.read("k0s_MHz", s.k0s_MHz);
    r.read("k1s_MHz", s.k1s_MHz);
    r.read("ks0_MHz", s.ks0_MHz);
    r.read("ks1_MHz", s.ks1_MHz);
    r.read("epsilon", s.epsilon);
    r.read("k_exc_MHz", s.k_exc_MHz);
    r.read("collection_eff", s.collection_eff);
    r.read("horizon_ns", s.horizon_ns);
    r.read("bin_width_ns", s.bin_width_ns);
    r.read("dt_ns", s.dt_ns);
    r.read("t_cut_ns", s.t_cut_ns);
    r.read("bin_edges_ns", s.bin_edges_ns);
    r.finish();
  }

  if (const json* p = root.find("detection")) {
    ObjectReader r(*p, "detection");
    r.read("source", cfg.detection.source);
    r.read("p_click_m0", cfg.detection.p_click_m0);
    r.read("p_click_m1", cfg.detection.p_click_m1);
    r.finish();
  }

  if (const json* p = root.find("trials")) {
    ObjectReader r(*p, "trials");
    auto& s = cfg.trials;
    r.read("n_trials", s.n_trials);
    r.read("seed", s.seed);
    r.read("f_min_MHz", s.f_min_MHz);
    r.read("f_max_MHz", s.f_max_MHz);
    r.read("truth_mode", s.truth_mode);
    r.read("fixed_truths_MHz", s.fixed_truths_MHz);
    r.finish();
  }

  root.read("grid_size", cfg.grid_size);

  if (const json* p = root.find("output")) {
    ObjectReader r(*p, "output");
    r.read("dir", cfg.output.dir);
    r.read("format", cfg.output.format);
    r.read("threads", cfg.output.threads);
    r.finish();
  }

  root.finish();
  validate_config(cfg);
  return cfg;
}

RunConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<document>", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const RunConfig& cfg) {
  const auto& p = cfg.protocol;
  require(parse_mode(p.mode).has_value(), "protocol.mode",
          "must be one of threshold, batch, smu, batch-timed, smu-timed");
  require(p.K >= 0 && p.K <= 30, "protocol.K", "must lie in [0, 30]");
  require(p.G >= 1, "protocol.G", "must be >= 1");
  require(p.F >= 0, "protocol.F", "must be >= 0");
  require(p.R >= 1, "protocol.R", "must be >= 1");
  require(p.tau0_ns > 0.0, "protocol.tau0_ns", "must be positive");
  require(p.t2_star_us > 0.0, "protocol.t2_star_us", "must be positive");
  require(p.overhead_us >= 0.0, "protocol.overhead_us", "must be >= 0");

  bool any_timed = is_timed(*parse_mode(p.mode)) && cfg.runs.empty();
  for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
    const auto& r = cfg.runs[i];
    const std::string at = "runs[" + std::to_string(i) + "]";
    for (std::size_t k = 0; k < r.modes.size(); ++k) {
      const auto m = parse_mode(r.modes[k]);
      require(m.has_value(), at + ".modes[" + std::to_string(k) + "]", "unknown mode '" + r.modes[k] + "'");
      any_timed = any_timed || is_timed(*m);
    }
    if (r.modes.empty()) any_timed = any_timed || is_timed(*parse_mode(p.mode));
    require(!r.K || (*r.K >= 0 && *r.K <= 30), at + ".K", "must lie in [0, 30]");
    require(!r.G || *r.G >= 1, at + ".G", "must be >= 1");
    require(!r.F || *r.F >= 0, at + ".F", "must be >= 0");
    require(!r.R || *r.R >= 1, at + ".R", "must be >= 1");
    require(r.axis == "R" || r.axis == "G", at + ".axis", "must be \"R\" or \"G\"");
    for (std::size_t k = 0; k < r.values.size(); ++k)
      require(r.values[k] >= 1, at + ".values[" + std::to_string(k) + "]", "must be >= 1");
  }

  const auto& ph = cfg.photodynamics;
  const std::pair<const char*, double> rates[] = {
      {"gamma_rad_MHz", ph.gamma_rad_MHz}, {"k0s_MHz", ph.k0s_MHz}, {"k1s_MHz", ph.k1s_MHz},
      {"ks0_MHz", ph.ks0_MHz},             {"ks1_MHz", ph.ks1_MHz}, {"k_exc_MHz", ph.k_exc_MHz}};
  for (const auto& [name, v] : rates) require(v >= 0.0, std::string("photodynamics.") + name, "must be >= 0");
  require(ph.epsilon >= 0.0 && ph.epsilon <= 1.0, "photodynamics.epsilon", "must lie in [0, 1]");
  require(ph.collection_eff >= 0.0 && ph.collection_eff <= 1.0, "photodynamics.collection_eff",
          "must lie in [0, 1]");
  require(ph.dt_ns > 0.0, "photodynamics.dt_ns", "must be positive");
  require(ph.bin_width_ns > 0.0, "photodynamics.bin_width_ns", "must be positive");
  require(ph.horizon_ns >= 700.0, "photodynamics.horizon_ns", "must be >= 700");
  if (ph.t_cut_ns)
    require(*ph.t_cut_ns > 0.0 && *ph.t_cut_ns <= ph.horizon_ns, "photodynamics.t_cut_ns",
            "must lie in (0, horizon_ns]");
  require(ph.bin_edges_ns.size() >= 2, "photodynamics.bin_edges_ns", "need at least two edges");
  require(ph.bin_edges_ns.front() == 0.0, "photodynamics.bin_edges_ns", "first edge must be 0");
  for (std::size_t i = 1; i < ph.bin_edges_ns.size(); ++i)
    require(ph.bin_edges_ns[i] > ph.bin_edges_ns[i - 1], "photodynamics.bin_edges_ns",
            "edges must strictly increase");
  require(ph.bin_edges_ns.back() <= ph.horizon_ns, "photodynamics.bin_edges_ns",
          "last edge must not exceed horizon_ns");

  const auto& d = cfg.detection;
  require(d.source == "photodynamics" || d.source == "fixed", "detection.source",
          "must be \"photodynamics\" or \"fixed\"");
  if (d.source == "fixed") {
    require(d.p_click_m1 > 0.0 && d.p_click_m1 <= d.p_click_m0 && d.p_click_m0 < 1.0,
            "detection.p_click_m0", "require 0 < p_click_m1 <= p_click_m0 < 1");
    require(!any_timed, "detection.source", "timed modes need photodynamics-derived bins");
  }

  const auto& t = cfg.trials;
  const double half_MHz = 1e3 / (2.0 * p.tau0_ns);
  require(t.n_trials >= 1, "trials.n_trials", "must be >= 1");
  require(t.f_min_MHz <= t.f_max_MHz, "trials.f_min_MHz", "must not exceed f_max_MHz");
  require(t.f_min_MHz > -half_MHz, "trials.f_min_MHz", "must lie inside the prior range");
  require(t.f_max_MHz < half_MHz, "trials.f_max_MHz", "must lie inside the prior range");
  require(t.truth_mode == "uniform-random" || t.truth_mode == "fixed-list", "trials.truth_mode",
          "must be \"uniform-random\" or \"fixed-list\"");
  if (t.truth_mode == "fixed-list") {
    require(!t.fixed_truths_MHz.empty(), "trials.fixed_truths_MHz", "must not be empty");
    for (double f : t.fixed_truths_MHz)
      require(f > -half_MHz && f < half_MHz, "trials.fixed_truths_MHz", "entry outside the prior range");
  }

  require(cfg.grid_size >= 2, "grid_size", "must be >= 2");
  require(cfg.output.format == "csv" || cfg.output.format == "json", "output.format",
          "must be \"csv\" or \"json\"");
  require(cfg.output.threads >= 0, "output.threads", "must be >= 0");
}

json to_json(const RunConfig& cfg) {
  json doc;
  const auto& p = cfg.protocol;
  doc["protocol"] = {{"mode", p.mode},       {"K", p.K},
                     {"G", p.G},             {"F", p.F},
                     {"R", p.R},             {"tau0_ns", p.tau0_ns},
                     {"t2_star_us", p.t2_star_us}, {"overhead_us", p.overhead_us}};
  json runs = json::array();
  for (const auto& r : cfg.runs) {
    json j = {{"label", r.label}, {"modes", r.modes}, {"axis", r.axis}, {"values", r.values}};
    if (r.K) j["K"] = *r.K;
    if (r.G) j["G"] = *r.G;
    if (r.F) j["F"] = *r.F;
    if (r.R) j["R"] = *r.R;
    runs.push_back(std::move(j));
  }
  doc["runs"] = std::move(runs);
  const auto& ph = cfg.photodynamics;
  doc["photodynamics"] = {{"gamma_rad_MHz", ph.gamma_rad_MHz},
                          {"k0s_MHz", ph.k0s_MHz},
                          {"k1s_MHz", ph.k1s_MHz},
                          {"ks0_MHz", ph.ks0_MHz},
                          {"ks1_MHz", ph.ks1_MHz},
                          {"epsilon", ph.epsilon},
                          {"k_exc_MHz", ph.k_exc_MHz},
                          {"collection_eff", ph.collection_eff},
                          {"horizon_ns", ph.horizon_ns},
                          {"bin_width_ns", ph.bin_width_ns},
                          {"dt_ns", ph.dt_ns},
                          {"t_cut_ns", ph.t_cut_ns ? json(*ph.t_cut_ns) : json(nullptr)},
                          {"bin_edges_ns", ph.bin_edges_ns}};
  doc["detection"] = {{"source", cfg.detection.source},
                      {"p_click_m0", cfg.detection.p_click_m0},
                      {"p_click_m1", cfg.detection.p_click_m1}};
  const auto& t = cfg.trials;
  doc["trials"] = {{"n_trials", t.n_trials},   {"seed", t.seed},
                   {"f_min_MHz", t.f_min_MHz}, {"f_max_MHz", t.f_max_MHz},
                   {"truth_mode", t.truth_mode}, {"fixed_truths_MHz", t.fixed_truths_MHz}};
  doc["grid_size"] = cfg.grid_size;
  doc["output"] = {{"dir", cfg.output.dir}, {"format", cfg.output.format}, {"threads", cfg.output.threads}};
  return doc;
}

bool RunConfig::operator==(const RunConfig& other) const { return to_json(*this) == to_json(other); }

std::vector<std::string> preset_names() {
  return {"default", "fig2-threshold", "fig2-batching", "fig2-smu", "fig4"};
}

RunConfig preset(std::string_view name) {
  RunConfig cfg;
  auto run = [](std::string label, std::vector<std::string> modes, int G, int F, std::optional<long> R,
                std::string axis, std::vector<long> values) {
    RunSection r;
    r.label = std::move(label);
    r.modes = std::move(modes);
    r.G = G;
    r.F = F;
    r.R = R;
    r.axis = std::move(axis);
    r.values = std::move(values);
    return r;
  };
  if (name == "default") return cfg;
  if (name == "fig2-threshold") {
    cfg.protocol.mode = "threshold";
    cfg.runs.push_back(run("threshold G=15 F=1", {"threshold"}, 15, 1, std::nullopt, "R",
                           {1000, 1500, 2500, 5000, 10000, 20000}));
    cfg.runs.push_back(run("threshold G=F=9", {"threshold"}, 9, 9, std::nullopt, "R",
                           {1000, 2000, 3000, 5000, 10000, 20000, 50000}));
  } else if (name == "fig2-batching") {
    cfg.runs.push_back(run("batching G=15 F=1", {"batch"}, 15, 1, std::nullopt, "R",
                           {500, 1000, 2500, 5000, 10000, 20000, 50000}));
  } else if (name == "fig2-smu") {
    cfg.protocol.mode = "smu";
    cfg.runs.push_back(run("smu R=700 F=1", {"smu"}, 15, 1, 700, "G", {10, 15, 20, 30, 45, 61, 80}));
  } else if (name == "fig4") {
    cfg.runs.push_back(run("batching +/- t-info", {"batch", "batch-timed"}, 15, 1, std::nullopt, "R",
                           {2500, 5000, 10000, 20000, 50000}));
    cfg.runs.push_back(
        run("smu +/- t-info", {"smu", "smu-timed"}, 15, 1, 700, "G", {15, 30, 45, 61}));
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("--preset", "unknown preset '" + std::string(name) + "' (known: " + known + ")");
  }
  validate_config(cfg);
  return cfg;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  json doc = to_json(cfg);
  doc.erase("output");
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ProtocolParams protocol_params(const RunConfig& cfg) {
  const auto& s = cfg.protocol;
  ProtocolParams p;
  p.mode = *parse_mode(s.mode);
  p.K = s.K;
  p.G = s.G;
  p.F = s.F;
  p.R = s.R;
  p.tau0 = s.tau0_ns * 1e-9;
  p.t2_star = s.t2_star_us * 1e-6;
  p.overhead_per_ramsey = s.overhead_us * 1e-6;
  return p;
}

RateConstants rate_constants(const RunConfig& cfg) {
  const auto& s = cfg.photodynamics;
  RateConstants c;
  c.gamma_rad = s.gamma_rad_MHz * 1e6;
  c.k0s = s.k0s_MHz * 1e6;
  c.k1s = s.k1s_MHz * 1e6;
  c.ks0 = s.ks0_MHz * 1e6;
  c.ks1 = s.ks1_MHz * 1e6;
  c.epsilon = s.epsilon;
  c.k_exc = s.k_exc_MHz * 1e6;
  c.collection_eff = s.collection_eff;
  return c;
}

TimeBinning time_binning(const RunConfig& cfg) {
  TimeBinning b;
  for (double e : cfg.photodynamics.bin_edges_ns) b.edges.push_back(e * 1e-9);
  return b;
}

TrialConfig trial_config(const RunConfig& cfg) {
  const auto& s = cfg.trials;
  TrialConfig t;
  t.n_trials = s.n_trials;
  t.seed = s.seed;
  t.f_min = s.f_min_MHz * 1e6;
  t.f_max = s.f_max_MHz * 1e6;
  t.truth_mode = s.truth_mode == "fixed-list" ? TruthMode::fixed_list : TruthMode::uniform_random;
  for (double f : s.fixed_truths_MHz) t.fixed_truths.push_back(f * 1e6);
  return t;
}

std::vector<SweepSpec> sweep_specs(const RunConfig& cfg) {
  const ProtocolParams base = protocol_params(cfg);
  std::vector<SweepSpec> specs;
  if (cfg.runs.empty()) {
    specs.push_back({base, {base.mode}, SweepAxis::R, {}});
    return specs;
  }
  for (const auto& r : cfg.runs) {
    SweepSpec s;
    s.base = base;
    if (r.K) s.base.K = *r.K;
    if (r.G) s.base.G = *r.G;
    if (r.F) s.base.F = *r.F;
    if (r.R) s.base.R = *r.R;
    for (const auto& m : r.modes) s.modes.push_back(*parse_mode(m));
    if (s.modes.empty()) s.modes.push_back(base.mode);
    s.base.mode = s.modes.front();
    s.axis = r.axis == "G" ? SweepAxis::G : SweepAxis::R;
    s.values = r.values;
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace nvqpe
