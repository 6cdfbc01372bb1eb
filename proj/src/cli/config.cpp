#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "perturblab/cli.hpp"

namespace perturblab::cli {

using nlohmann::json;

namespace {

enum class Kind { number, integer, number_list, integer_list, number_pair, integer_pair, choice };

struct Param {
  std::string key;
  Kind kind;
  json preset;
  bool required = false;  // must appear in a config file
  std::vector<std::string> choices = {};
};

using Schema = std::vector<Param>;

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> s{
      {"standard-map-portrait",
       {{"eps", Kind::number_list, {0.0, 0.4, 0.8, 1.2}, true},
        {"seeds", Kind::integer, 40},
        {"iterations", Kind::integer, 500},
        {"action_range", Kind::number_pair, {0.0, kTwoPi}}}},
      {"golden-breakup",
       {{"K", Kind::integer, 1024},
        {"eps_range", Kind::number_pair, {0.5, 1.2}},
        {"bisection_tol", Kind::number, 0.0025},
        {"tol", Kind::number, 1e-10},
        {"max_step", Kind::number, 0.02}}},
      {"forced-oscillator-portrait",
       {{"eps", Kind::number_list, {0.0, 0.001, 0.005, 0.02}, true},
        {"omega0", Kind::number, 0.6},
        {"omega", Kind::number, 1.0},
        {"seeds", Kind::integer, 12},
        {"iterations", Kind::integer, 300},
        {"x_range", Kind::number_pair, {-0.3, 0.45}}}},
      {"averaging-demo",
       {{"eps", Kind::number_list, {0.1, 0.03, 0.01}, true},
        {"x0", Kind::number, 0.1},
        {"samples", Kind::integer, 2000}}},
      {"lie-triangle-demo", {{"trials", Kind::integer, 6}}},
      {"tihonov",
       {{"eps", Kind::number_list, {0.1, 0.05, 0.02}, true},
        {"x0", Kind::number, 1.5},
        {"y0", Kind::number, 0.3},
        {"horizon", Kind::number, 3.0},
        {"symbolic_order", Kind::integer, 7}}},
      {"gevrey-truncation",
       {{"eps", Kind::number, 0.1},
        {"order", Kind::integer, 20},
        {"amplitudes", Kind::choice, "factorial", false, {"factorial", "expansion"}}}},
      {"hopf-delay",
       {{"y0", Kind::number, -0.5},
        {"eps", Kind::number, 0.01},
        {"threshold", Kind::number, 0.1},
        {"y_end", Kind::number, 1.5}}},
      {"buffer-point", {{"t0", Kind::number_list, {-2.0, -0.5}, true}, {"eps", Kind::number, 0.005}}},
      {"vdp-relaxation",
       {{"eps", Kind::number_list, {1e-4, std::pow(10.0, -3.3), std::pow(10.0, -2.5), 1e-2}, true}}},
      {"tb-diagram",
       {{"lambda1_range", Kind::number_pair, {-0.1, 0.02}},
        {"lambda2_range", Kind::number_pair, {-0.1, 0.4}},
        {"grid", Kind::integer_pair, {61, 51}},
        {"check_lambda1", Kind::number, -0.04}}},
      {"cusp-diagram",
       {{"lambda1_range", Kind::number_pair, {-1.0, 1.0}},
        {"lambda2_range", Kind::number_pair, {-1.0, 1.0}},
        {"grid", Kind::integer_pair, {101, 101}}}},
      {"acceptance-suite", {{"criteria", Kind::integer_list, json::array()}}},
  };
  return s;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest(const std::string& name, const std::vector<std::string>& options) {
  std::string best;
  std::size_t d = std::string::npos;
  for (const auto& o : options) {
    const std::size_t e = edit_distance(name, o);
    if (e < d) {
      d = e;
      best = o;
    }
  }
  return best;
}

// 1-based line of the first "key" at or after `from`, 0 when absent.
int line_of(const std::string& text, const std::string& key, std::size_t from = 0) {
  const std::size_t p = text.find("\"" + key + "\"", from);
  if (p == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + p, '\n'));
}

class Diagnostics {
 public:
  Diagnostics(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {
    params_at_ = text.find("\"params\"");
    if (params_at_ == std::string::npos) params_at_ = 0;
  }
  void top(const std::string& key, const std::string& msg) { add(line_of(text_, key), key, msg); }
  void param(const std::string& key, const std::string& msg) {
    add(line_of(text_, key, params_at_), "params." + key, msg);
  }
  void add(int line, const std::string& key, const std::string& msg) {
    std::string s = source_;
    if (line > 0) s += ":" + std::to_string(line);
    s += ": " + key + ": " + msg;
    errors.push_back(std::move(s));
  }
  std::vector<std::string> errors;

 private:
  const std::string& text_;
  std::string source_;
  std::size_t params_at_ = 0;
};

bool is_int(const json& v) {
  if (v.is_number_integer()) return true;
  return v.is_number_float() && std::isfinite(v.get<double>()) && std::floor(v.get<double>()) == v.get<double>();
}

std::string check_value(const Param& p, const json& v) {
  auto list_of = [&](bool ints, std::size_t exact) -> std::string {
    if (!v.is_array()) return "expected a list";
    if (v.empty()) return "list is empty";
    if (exact && v.size() != exact) return "expected " + std::to_string(exact) + " values";
    for (const auto& e : v) {
      if (!e.is_number()) return "list entries must be numbers";
      if (ints && !is_int(e)) return "list entries must be integers";
    }
    return {};
  };
  switch (p.kind) {
    case Kind::number:
      return v.is_number() ? "" : "expected a number";
    case Kind::integer:
      return is_int(v) ? "" : "expected an integer";
    case Kind::number_list:
      return list_of(false, 0);
    case Kind::integer_list:
      if (v.is_array() && v.empty()) return {};
      return list_of(true, 0);
    case Kind::number_pair:
      return list_of(false, 2);
    case Kind::integer_pair:
      return list_of(true, 2);
    case Kind::choice:
      if (!v.is_string()) return "expected a string";
      if (std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end())
        return "unknown value '" + v.get<std::string>() + "', expected one of " + json(p.choices).dump();
      return {};
  }
  return {};
}

json normalize(const Param& p, const json& v) {
  if (p.kind == Kind::integer) return static_cast<long long>(v.get<double>());
  if (p.kind == Kind::integer_list || p.kind == Kind::integer_pair) {
    json out = json::array();
    for (const auto& e : v) out.push_back(static_cast<long long>(e.get<double>()));
    return out;
  }
  return v;
}

const std::vector<std::string> kFormats{"csv", "json", "svg"};

std::string check_formats(const std::vector<std::string>& f) {
  if (f.empty()) return "no output format selected";
  for (const auto& x : f)
    if (std::find(kFormats.begin(), kFormats.end(), x) == kFormats.end())
      return "unknown format '" + x + "', expected csv, json or svg";
  return {};
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string unknown_experiment(const std::string& name) {
  return "unknown experiment '" + name + "'; did you mean '" + nearest_experiment(name) + "'?";
}

// Collects every problem it can find before giving up.
ValidationReport check(const std::string& text, const std::string& source, const Overrides& over) {
  ValidationReport rep;
  Diagnostics diag(text, source);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + at, '\n'));
    diag.add(line, "(document)", std::string("malformed JSON: ") + e.what());
    rep.errors = diag.errors;
    return rep;
  }
  if (!doc.is_object()) {
    diag.add(1, "(document)", "expected a JSON object");
    rep.errors = diag.errors;
    return rep;
  }
  static const std::vector<std::string> top{"experiment", "params", "output_dir", "formats", "rng_seed"};
  for (const auto& [k, v] : doc.items())
    if (std::find(top.begin(), top.end(), k) == top.end())
      diag.top(k, "unknown key; did you mean '" + nearest(k, top) + "'?");

  ExperimentConfig cfg;
  if (over.experiment) {
    cfg.experiment = *over.experiment;
  } else if (doc.contains("experiment")) {
    if (doc["experiment"].is_string())
      cfg.experiment = doc["experiment"].get<std::string>();
    else
      diag.top("experiment", "expected a string");
  } else {
    diag.add(0, "experiment", "missing experiment name");
  }
  const auto& known = schemas();
  const bool exp_ok = known.count(cfg.experiment) > 0;
  if (!cfg.experiment.empty() && !exp_ok) {
    if (over.experiment)
      diag.add(0, "experiment", unknown_experiment(cfg.experiment));
    else
      diag.top("experiment", unknown_experiment(cfg.experiment));
  }

  if (doc.contains("output_dir")) {
    if (doc["output_dir"].is_string() && !doc["output_dir"].get<std::string>().empty())
      cfg.output_dir = doc["output_dir"].get<std::string>();
    else
      diag.top("output_dir", "expected a non-empty string");
  }
  if (doc.contains("formats")) {
    const auto& f = doc["formats"];
    bool ok = f.is_array();
    if (ok)
      for (const auto& e : f) ok = ok && e.is_string();
    if (!ok) {
      diag.top("formats", "expected a list of strings");
    } else {
      cfg.formats = f.get<std::vector<std::string>>();
      if (auto m = check_formats(cfg.formats); !m.empty()) diag.top("formats", m);
    }
  }
  if (doc.contains("rng_seed")) {
    const auto& s = doc["rng_seed"];
    if (s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0))
      cfg.rng_seed = s.get<std::uint64_t>();
    else
      diag.top("rng_seed", "expected a non-negative integer");
  }

  json params = json::object();
  if (doc.contains("params")) {
    if (doc["params"].is_object())
      params = doc["params"];
    else
      diag.top("params", "expected an object");
  }
  if (exp_ok) {
    const Schema& sc = known.at(cfg.experiment);
    std::vector<std::string> keys;
    for (const auto& p : sc) keys.push_back(p.key);
    for (const auto& [k, v] : params.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        std::string msg = "unknown key for " + cfg.experiment;
        if (!keys.empty()) msg += "; did you mean '" + nearest(k, keys) + "'?";
        diag.param(k, msg);
      }
    }
    for (const auto& p : sc) {
      if (!params.contains(p.key)) {
        if (p.required) {
          const std::string what = p.key == "eps" ? "list of eps values" : "list of values";
          diag.add(line_of(text, "params"), "params." + p.key,
                   "missing " + what + " required by " + cfg.experiment);
        } else {
          cfg.params[p.key] = p.preset;
        }
        continue;
      }
      const auto& v = params[p.key];
      if (auto m = check_value(p, v); !m.empty())
        diag.param(p.key, m);
      else
        cfg.params[p.key] = normalize(p, v);
    }
  }

  if (over.output_dir) cfg.output_dir = *over.output_dir;
  if (over.formats) {
    cfg.formats = *over.formats;
    if (auto m = check_formats(cfg.formats); !m.empty()) diag.add(0, "--format", m);
  }
  if (over.rng_seed) cfg.rng_seed = *over.rng_seed;
  cfg.formats = sorted_unique(cfg.formats);

  rep.errors = diag.errors;
  rep.ok = rep.errors.empty();
  if (rep.ok) rep.config = cfg;
  return rep;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

bool ExperimentConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "standard-map-portrait", "golden-breakup", "forced-oscillator-portrait", "averaging-demo",
      "lie-triangle-demo",     "tihonov",        "gevrey-truncation",          "hopf-delay",
      "buffer-point",          "vdp-relaxation", "tb-diagram",                 "cusp-diagram",
      "acceptance-suite"};
  return names;
}

std::string nearest_experiment(const std::string& name) { return nearest(name, experiment_names()); }

ExperimentConfig default_config(const std::string& experiment) {
  const auto& known = schemas();
  auto it = known.find(experiment);
  if (it == known.end()) throw ConfigError(unknown_experiment(experiment));
  ExperimentConfig c;
  c.experiment = experiment;
  for (const auto& p : it->second) c.params[p.key] = p.preset;
  c.formats = sorted_unique(c.formats);
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source, const Overrides& over) {
  auto rep = check(text, source, over);
  if (!rep.ok) {
    std::string msg;
    for (const auto& e : rep.errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  return *rep.config;
}

ExperimentConfig resolve_config(const std::optional<std::string>& path, const Overrides& over) {
  if (path) return parse_config(read_file(*path), *path, over);
  if (!over.experiment) throw ConfigError("no experiment given");
  ExperimentConfig c = default_config(*over.experiment);
  if (over.output_dir) c.output_dir = *over.output_dir;
  if (over.formats) {
    if (auto m = check_formats(*over.formats); !m.empty()) throw ConfigError("--format: " + m);
    c.formats = sorted_unique(*over.formats);
  }
  if (over.rng_seed) c.rng_seed = *over.rng_seed;
  return c;
}

std::vector<std::string> parse_formats(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json to_json(const ExperimentConfig& c) {
  return json{{"experiment", c.experiment},
              {"params", c.params},
              {"output_dir", c.output_dir},
              {"formats", c.formats},
              {"rng_seed", c.rng_seed}};
}

ValidationReport validate_text(const std::string& text, const std::string& source) { return check(text, source, {}); }

ValidationReport validate(const std::string& config_path) {
  return validate_text(read_file(config_path), config_path);
}

}  // namespace perturblab::cli
