#include "scatterkit/app/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace scatterkit::app {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::config, "config: " + path + ": " + msg);
}

// Reads the keys of one object, rejecting anything not listed.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) fail(path_.empty() ? key : path_ + "." + key, "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const std::string& key, double& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(path(key), "expected a number");
    out = v.get<double>();
  }

  void read(const std::string& key, int& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(path(key), "expected an integer");
    out = v.get<int>();
  }

  void read(const std::string& key, std::uint64_t& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(path(key), "expected a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void read(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(path(key), "expected true or false");
    out = v.get<bool>();
  }

  void read(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(path(key), "expected a string");
    out = v.get<std::string>();
  }

  void read(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(path(key), "expected an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) fail(path(key), "expected an array of numbers");
      out.push_back(x.get<double>());
    }
  }

 private:
  const json& j_;
  std::string path_;
};

template <typename Enum>
Enum parse_enum(const Section& s, const std::string& key, Enum current,
                std::initializer_list<std::pair<const char*, Enum>> names) {
  if (!s.has(key)) return current;
  std::string text;
  s.read(key, text);
  for (const auto& [name, value] : names) {
    if (text == name) return value;
  }
  std::string options;
  for (const auto& [name, _] : names) options += (options.empty() ? "" : ", ") + std::string(name);
  fail(s.path(key), "unknown value \"" + text + "\" (expected one of " + options + ")");
}

template <typename Enum>
std::string enum_name(Enum value, std::initializer_list<std::pair<const char*, Enum>> names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

const std::initializer_list<std::pair<const char*, PotentialKind>> kPotentialNames{
    {"dense", PotentialKind::dense_hermitian}, {"separable", PotentialKind::separable_rank1}};
const std::initializer_list<std::pair<const char*, SpectrumKind>> kSpectrumNames{
    {"linear", SpectrumKind::linear}, {"quadratic", SpectrumKind::quadratic}, {"explicit", SpectrumKind::explicit_list}};
const std::initializer_list<std::pair<const char*, GridSpacing>> kSpacingNames{
    {"linear", GridSpacing::linear}, {"log", GridSpacing::logarithmic}};

PairChannel parse_channel(const json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.size() == 2 && std::isdigit(static_cast<unsigned char>(s[0])) &&
        std::isdigit(static_cast<unsigned char>(s[1]))) {
      try {
        return PairChannel(s[0] - '0', s[1] - '0');
      } catch (const Error& e) {
        fail(path, e.what());
      }
    }
  } else if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
    try {
      return PairChannel(v[0].get<int>(), v[1].get<int>());
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  fail(path, "channel must be a two-digit string like \"23\" or a pair [m, n]");
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (const auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw Error(ErrorKind::config, "config parse error at line " + std::to_string(line) + ", column " +
                                       std::to_string(col) + ": " + what);
  }

  ScenarioConfig cfg;
  const Section top(root, "", {"model", "grid", "verify", "coupling_scan", "thresholds", "twobody", "outputs"});

  if (top.has("model")) {
    const Section m(top.at("model"), "model",
                    {"n_particles", "dim", "seed", "coupling_scale", "potential", "h0", "inert_channels"});
    m.read("n_particles", cfg.model.n_particles);
    m.read("dim", cfg.model.dim);
    m.read("seed", cfg.model.seed);
    m.read("coupling_scale", cfg.model.coupling_scale);
    cfg.model.potential_kind = parse_enum(m, "potential", cfg.model.potential_kind, kPotentialNames);
    if (m.has("h0")) {
      const Section h(m.at("h0"), "model.h0", {"kind", "spacing", "values"});
      cfg.model.h0_kind = parse_enum(h, "kind", cfg.model.h0_kind, kSpectrumNames);
      h.read("spacing", cfg.model.h0_spacing);
      h.read("values", cfg.model.h0_values);
    }
    if (m.has("inert_channels")) {
      const auto& list = m.at("inert_channels");
      if (!list.is_array()) fail("model.inert_channels", "expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        cfg.model.inert_channels.push_back(
            parse_channel(list[i], "model.inert_channels[" + std::to_string(i) + "]"));
      }
    }
  }

  if (top.has("grid")) {
    const Section g(top.at("grid"), "grid", {"e_min", "e_max", "points", "spacing", "eps"});
    g.read("e_min", cfg.grid.e_min);
    g.read("e_max", cfg.grid.e_max);
    g.read("points", cfg.grid.points);
    cfg.grid.spacing = parse_enum(g, "spacing", cfg.grid.spacing, kSpacingNames);
    g.read("eps", cfg.grid.eps);
  }

  if (top.has("verify")) {
    const Section v(top.at("verify"), "verify", {"e0"});
    if (v.has("e0")) {
      double e0 = 0;
      v.read("e0", e0);
      cfg.verify_e0 = e0;
    }
  }

  top.read("coupling_scan", cfg.coupling_scan);

  if (top.has("thresholds")) {
    const Section t(top.at("thresholds"), "thresholds",
                    {"smallness", "identity", "pair_unitarity", "hermiticity", "osborn", "condition_limit"});
    t.read("smallness", cfg.thresholds.smallness);
    t.read("identity", cfg.thresholds.identity);
    t.read("pair_unitarity", cfg.thresholds.pair_unitarity);
    t.read("hermiticity", cfg.thresholds.hermiticity);
    t.read("osborn", cfg.thresholds.osborn);
    t.read("condition_limit", cfg.thresholds.condition_limit);
  }

  if (top.has("twobody")) {
    const Section t(top.at("twobody"), "twobody",
                    {"beta", "strength", "nodes", "cutoff", "k_on", "analytic_tolerance", "bound_tolerance",
                     "convergence_limit"});
    t.read("beta", cfg.twobody.beta);
    t.read("strength", cfg.twobody.strength);
    t.read("nodes", cfg.twobody.nodes);
    t.read("cutoff", cfg.twobody.cutoff);
    t.read("k_on", cfg.twobody.k_on);
    t.read("analytic_tolerance", cfg.twobody.analytic_tolerance);
    t.read("bound_tolerance", cfg.twobody.bound_tolerance);
    t.read("convergence_limit", cfg.twobody.convergence_limit);
  }

  if (top.has("outputs")) {
    const Section o(top.at("outputs"), "outputs", {"directory", "csv", "json", "plots"});
    o.read("directory", cfg.outputs.directory);
    o.read("csv", cfg.outputs.csv);
    o.read("json", cfg.outputs.json);
    o.read("plots", cfg.outputs.plots);
  }

  validate(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  json h0 = {{"kind", enum_name(cfg.model.h0_kind, kSpectrumNames)}, {"spacing", cfg.model.h0_spacing}};
  h0["values"] = cfg.model.h0_values;
  json inert = json::array();
  for (const auto& c : cfg.model.inert_channels) inert.push_back(c.label());

  json root;
  root["model"] = {{"n_particles", cfg.model.n_particles},
                   {"dim", cfg.model.dim},
                   {"seed", cfg.model.seed},
                   {"coupling_scale", cfg.model.coupling_scale},
                   {"potential", enum_name(cfg.model.potential_kind, kPotentialNames)},
                   {"h0", h0},
                   {"inert_channels", inert}};
  root["grid"] = {{"e_min", cfg.grid.e_min},
                  {"e_max", cfg.grid.e_max},
                  {"points", cfg.grid.points},
                  {"spacing", enum_name(cfg.grid.spacing, kSpacingNames)},
                  {"eps", cfg.grid.eps}};
  root["verify"] = json::object();
  if (cfg.verify_e0) root["verify"]["e0"] = *cfg.verify_e0;
  root["coupling_scan"] = cfg.coupling_scan;
  root["thresholds"] = {{"smallness", cfg.thresholds.smallness},
                        {"identity", cfg.thresholds.identity},
                        {"pair_unitarity", cfg.thresholds.pair_unitarity},
                        {"hermiticity", cfg.thresholds.hermiticity},
                        {"osborn", cfg.thresholds.osborn},
                        {"condition_limit", cfg.thresholds.condition_limit}};
  root["twobody"] = {{"beta", cfg.twobody.beta},
                     {"strength", cfg.twobody.strength},
                     {"nodes", cfg.twobody.nodes},
                     {"cutoff", cfg.twobody.cutoff},
                     {"k_on", cfg.twobody.k_on},
                     {"analytic_tolerance", cfg.twobody.analytic_tolerance},
                     {"bound_tolerance", cfg.twobody.bound_tolerance},
                     {"convergence_limit", cfg.twobody.convergence_limit}};
  root["outputs"] = {{"directory", cfg.outputs.directory},
                     {"csv", cfg.outputs.csv},
                     {"json", cfg.outputs.json},
                     {"plots", cfg.outputs.plots}};
  return root.dump(2) + "\n";
}

void validate(const ScenarioConfig& cfg) {
  try {
    scatterkit::validate(cfg.model);
    scatterkit::validate(cfg.grid);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  if (cfg.model.dim > 64) throw Error(ErrorKind::config, "model.dim above 64 is outside the dense-solver range");
  if (cfg.model.n_particles > 6) throw Error(ErrorKind::config, "model.n_particles above 6 is not supported");
  if (cfg.model.h0_kind == SpectrumKind::explicit_list) {
    for (double x : cfg.model.h0_values) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::config, "model.h0.values must be finite and >= 0");
    }
  }
  if (cfg.verify_e0 && !std::isfinite(*cfg.verify_e0)) throw Error(ErrorKind::config, "verify.e0 must be finite");
  for (double s : cfg.coupling_scan) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::config, "coupling_scan entries must be > 0");
  }
  const auto& t = cfg.thresholds;
  for (double x : {t.smallness, t.identity, t.pair_unitarity, t.hermiticity, t.osborn, t.condition_limit}) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorKind::config, "thresholds must be finite and > 0");
  }
  const auto& tb = cfg.twobody;
  if (!(tb.beta > 0.0)) throw Error(ErrorKind::config, "twobody.beta must be > 0");
  if (!std::isfinite(tb.strength)) throw Error(ErrorKind::config, "twobody.strength must be finite");
  if (tb.nodes < 64) throw Error(ErrorKind::config, "twobody.nodes must be >= 64 (the doubling ladder starts at nodes / 4)");
  if (tb.nodes > 2000) throw Error(ErrorKind::config, "twobody.nodes above 2000 is outside the dense-solver range");
  if (!(tb.cutoff > tb.beta)) throw Error(ErrorKind::config, "twobody.cutoff must exceed beta");
  if (!(tb.k_on > 0.0) || !(tb.k_on < tb.cutoff)) throw Error(ErrorKind::config, "twobody.k_on must lie in (0, cutoff)");
  for (double x : {tb.analytic_tolerance, tb.bound_tolerance, tb.convergence_limit}) {
    if (!(x > 0.0)) throw Error(ErrorKind::config, "twobody tolerances must be > 0");
  }
  if (cfg.outputs.directory.empty()) throw Error(ErrorKind::config, "outputs.directory must not be empty");
}

}  // namespace scatterkit::app
