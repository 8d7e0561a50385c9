#include "ffqkd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace ffqkd::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("expected a finite number, got '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int(std::string_view s) {
  s = trim(s);
  // accept integral values written in scientific notation (1e6)
  if (s.find_first_of(".eE") != std::string_view::npos) {
    const double v = parse_double(s);
    if (v != std::floor(v) || std::fabs(v) > 9.0e18)
      throw ConfigError("expected an integer, got '" + std::string(s) + "'");
    return static_cast<std::int64_t>(v);
  }
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

int parse_small_int(std::string_view s) {
  const std::int64_t v = parse_int(s);
  if (v < -1000000000 || v > 1000000000) throw ConfigError("integer out of range: " + std::string(trim(s)));
  return static_cast<int>(v);
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + std::string(s) + "'");
}

template <typename T>
std::string join(const std::vector<T>& values, const std::function<std::string(const T&)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

std::vector<double> arithmetic_grid(double lo, double hi, double step, const char* what) {
  if (!(step > 0)) throw ConfigError(std::string(what) + ": step must be > 0");
  if (!(hi >= lo)) throw ConfigError(std::string(what) + ": max must be >= min");
  const double span = (hi - lo) / step;
  if (span > 1e6) throw ConfigError(std::string(what) + ": more than 1e6 grid points");
  // the 1e-9 slack keeps hi on the grid despite rounding of (hi - lo) / step
  const auto count = static_cast<std::int64_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

Field number(const char* key, double RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = parse_double(v); },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

Field channel_number(const char* key, double ChannelParams::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.channel.*member = parse_double(v); },
          [member](const RunConfig& c) { return format_double(c.channel.*member); }};
}

template <typename Int>
Field integer(const char* key, Int RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = static_cast<Int>(parse_int(v)); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

template <typename Int>
Field spec_integer(const char* key, Int SweepSpec::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.spec.*member = static_cast<Int>(parse_small_int(v)); },
          [member](const RunConfig& c) { return std::to_string(c.spec.*member); }};
}

Field flag(const char* key, bool RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = parse_bool(v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field spec_flag(const char* key, bool SweepSpec::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.spec.*member = parse_bool(v); },
          [member](const RunConfig& c) { return std::string(c.spec.*member ? "true" : "false"); }};
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back({"preset", [](RunConfig& c, std::string_view v) { c = preset(trim(v)); },
                 [](const RunConfig& c) { return c.preset; }});
    f.push_back(channel_number("alpha_db_per_km", &ChannelParams::alpha_db_per_km));
    f.push_back(channel_number("alpha_qm_db_per_km", &ChannelParams::alpha_qm_db_per_km));
    f.push_back(channel_number("c_q_km_s", &ChannelParams::c_q));
    f.push_back(channel_number("c_c_km_s", &ChannelParams::c_c));
    f.push_back({"c_qm_km_s",
                 [](RunConfig& c, std::string_view v) {
                   if (trim(v) == "auto") {
                     c.c_qm_auto = true;
                   } else {
                     c.c_qm_auto = false;
                     c.channel.c_qm = parse_double(v);
                   }
                 },
                 [](const RunConfig& c) { return c.c_qm_auto ? std::string("auto") : format_double(c.channel.c_qm); }});
    f.push_back(channel_number("tau_s", &ChannelParams::tau_s));
    f.push_back(channel_number("eta_switch", &ChannelParams::eta_switch));
    f.push_back(channel_number("eta_det", &ChannelParams::eta_det));
    f.push_back(channel_number("dark_rate_hz", &ChannelParams::dark_rate_hz));
    f.push_back({"base_b", [](RunConfig& c, std::string_view v) { c.channel.base_b = parse_small_int(v); },
                 [](const RunConfig& c) { return std::to_string(c.channel.base_b); }});
    f.push_back(flag("no_dark_counts", &RunConfig::no_dark_counts));

    f.push_back({"mode",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "analytic") c.spec.mode = RateMode::Analytic;
                   else if (v == "numeric") c.spec.mode = RateMode::Numeric;
                   else throw ConfigError("mode must be analytic or numeric, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.spec.mode)); }});
    f.push_back({"chi_analytic", [](RunConfig& c, std::string_view v) { c.spec.analytic_chi = parse_double(v); },
                 [](const RunConfig& c) { return format_double(c.spec.analytic_chi); }});
    f.push_back(number("chi_min", &RunConfig::chi_min));
    f.push_back(number("chi_max", &RunConfig::chi_max));
    f.push_back(integer("chi_points", &RunConfig::chi_points));
    f.push_back(spec_flag("refine_chi", &SweepSpec::refine_chi));
    f.push_back({"d2",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   c.spec.d2_at_bound = false;
                   c.spec.fixed_d2_km.reset();
                   if (v == "bound") c.spec.d2_at_bound = true;
                   else if (v != "optimize") c.spec.fixed_d2_km = parse_double(v);
                 },
                 [](const RunConfig& c) {
                   if (c.spec.d2_at_bound) return std::string("bound");
                   if (c.spec.fixed_d2_km) return format_double(*c.spec.fixed_d2_km);
                   return std::string("optimize");
                 }});
    f.push_back(spec_integer("d2_points", &SweepSpec::d2_points));
    f.push_back(spec_flag("refine_d2", &SweepSpec::refine_d2));
    f.push_back({"d2_rel_tol", [](RunConfig& c, std::string_view v) { c.spec.d2_rel_tol = parse_double(v); },
                 [](const RunConfig& c) { return format_double(c.spec.d2_rel_tol); }});
    f.push_back({"m_candidates",
                 [](RunConfig& c, std::string_view v) {
                   c.spec.m_candidates.clear();
                   if (trim(v) == "default") return;
                   for (auto item : split_list(v)) c.spec.m_candidates.push_back(parse_int(item));
                 },
                 [](const RunConfig& c) {
                   if (c.spec.m_candidates.empty()) return std::string("default");
                   return join<std::int64_t>(c.spec.m_candidates, [](const std::int64_t& m) { return std::to_string(m); });
                 }});
    f.push_back(spec_integer("m_exact", &SweepSpec::m_exact));
    f.push_back(spec_integer("cutoff", &SweepSpec::cutoff));

    f.push_back(number("min_km", &RunConfig::min_km));
    f.push_back(number("max_km", &RunConfig::max_km));
    f.push_back(number("step_km", &RunConfig::step_km));
    f.push_back({"repeaters",
                 [](RunConfig& c, std::string_view v) {
                   c.repeaters.clear();
                   for (auto item : split_list(v)) c.repeaters.push_back(parse_small_int(item));
                 },
                 [](const RunConfig& c) {
                   return join<int>(c.repeaters, [](const int& n) { return std::to_string(n); });
                 }});
    f.push_back({"f",
                 [](RunConfig& c, std::string_view v) {
                   if (trim(v) == "auto") c.f.reset();
                   else c.f = parse_double(v);
                 },
                 [](const RunConfig& c) { return c.f ? format_double(*c.f) : std::string("auto"); }});
    f.push_back({"depths", [](RunConfig& c, std::string_view v) { c.depths = parse_depths(v); },
                 [](const RunConfig& c) {
                   return join<std::optional<int>>(c.depths, [](const std::optional<int>& d) {
                     return d ? std::to_string(*d) : std::string("inf");
                   });
                 }});
    f.push_back(number("gamma_min", &RunConfig::gamma_min));
    f.push_back(number("gamma_max", &RunConfig::gamma_max));
    f.push_back(number("gamma_step", &RunConfig::gamma_step));
    f.push_back(number("alpha_qm_min", &RunConfig::alpha_qm_min));
    f.push_back(number("alpha_qm_max", &RunConfig::alpha_qm_max));
    f.push_back(number("alpha_qm_step", &RunConfig::alpha_qm_step));

    f.push_back(number("p0", &RunConfig::p0));
    f.push_back(number("p1", &RunConfig::p1));
    f.push_back(integer("m", &RunConfig::m));
    f.push_back(integer("trials", &RunConfig::trials));
    f.push_back(integer("bins", &RunConfig::bins));
    f.push_back(integer("streams", &RunConfig::streams));
    f.push_back({"seed",
                 [](RunConfig& c, std::string_view v) {
                   const std::int64_t s = parse_int(v);
                   if (s < 0) throw ConfigError("seed must be >= 0");
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});

    f.push_back(flag("single_node", &RunConfig::single_node));
    f.push_back({"storage_config",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "repeater") c.storage_config = StorageConfig::Repeater;
                   else if (v == "slow-light") c.storage_config = StorageConfig::SlowLight;
                   else throw ConfigError("storage_config must be repeater or slow-light, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.storage_config)); }});
    f.push_back({"format",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "csv") c.format = OutputFormat::Csv;
                   else if (v == "json") c.format = OutputFormat::Json;
                   else throw ConfigError("format must be csv or json, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) { return std::string(c.format == OutputFormat::Csv ? "csv" : "json"); }});
    f.push_back({"output", [](RunConfig& c, std::string_view v) { c.output = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.output; }});
    return f;
  }();
  return fields;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : schema())
    if (key == f.key) return &f;
  return nullptr;
}

// Applies (key, value) pairs with `preset` first so later keys override it.
void apply_pairs(RunConfig& config, const std::vector<std::pair<std::string, std::string>>& pairs,
                 const std::vector<std::string>& where) {
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const bool is_preset = pairs[i].first == "preset";
      if (is_preset != (pass == 0)) continue;
      try {
        set_key(config, pairs[i].first, pairs[i].second);
      } catch (const ConfigError& e) {
        throw ConfigError(where[i] + ": " + e.what());
      }
    }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<std::optional<int>> parse_depths(std::string_view text) {
  std::vector<std::optional<int>> out;
  for (auto item : split_list(text)) {
    if (item == "inf") {
      out.emplace_back(std::nullopt);
      continue;
    }
    const int d = parse_small_int(item);
    if (d < 0) throw ConfigError("nesting depth must be >= 0 or inf");
    out.emplace_back(d);
  }
  return out;
}

ChannelParams RunConfig::effective_channel() const {
  ChannelParams p = channel;
  if (c_qm_auto) p.c_qm = p.alpha_qm_db_per_km == 0.2 ? p.c_q : kSpeedOfLightKmPerS;
  if (no_dark_counts) p.dark_rate_hz = 0;
  return p;
}

SweepSpec RunConfig::effective_spec() const {
  SweepSpec s = spec;
  s.chi_grid = SweepSpec::log_grid(chi_min, chi_max, chi_points);
  return s;
}

double RunConfig::effective_f() const {
  return f ? *f : channel.c_q / channel.c_c;
}

std::vector<double> RunConfig::distance_grid() const {
  if (!(min_km > 0)) throw ConfigError("min_km must be > 0");
  return arithmetic_grid(min_km, max_km, step_km, "distance range");
}

std::vector<double> RunConfig::alpha_qm_grid() const {
  if (!(alpha_qm_min >= 0)) throw ConfigError("alpha_qm_min must be >= 0");
  return arithmetic_grid(alpha_qm_min, alpha_qm_max, alpha_qm_step, "alpha_qm range");
}

std::vector<double> RunConfig::gamma_grid() const {
  if (!(gamma_min >= 0)) throw ConfigError("gamma_min must be >= 0");
  return arithmetic_grid(gamma_min, gamma_max, gamma_step, "gamma range");
}

void RunConfig::validate() const {
  try {
    effective_channel().validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  distance_grid();
  alpha_qm_grid();
  gamma_grid();
  if (!(chi_min > 0 && chi_max < 1 && chi_min <= chi_max)) throw ConfigError("chi range must satisfy 0 < chi_min <= chi_max < 1");
  if (chi_points < 1) throw ConfigError("chi_points must be >= 1");
  if (!(spec.analytic_chi > 0 && spec.analytic_chi < 1)) throw ConfigError("chi_analytic must lie in (0, 1)");
  if (spec.d2_points < 0 || spec.d2_points == 1) throw ConfigError("d2_points must be 0 (auto) or >= 2");
  if (!(spec.d2_rel_tol > 0 && spec.d2_rel_tol < 1)) throw ConfigError("d2_rel_tol must lie in (0, 1)");
  if (spec.fixed_d2_km && !(*spec.fixed_d2_km >= 0)) throw ConfigError("d2 must be >= 0");
  for (auto m_value : spec.m_candidates)
    if (m_value < 0) throw ConfigError("m_candidates must be >= 0");
  if (spec.m_exact < 1) throw ConfigError("m_exact must be >= 1");
  if (spec.cutoff < 1 || spec.cutoff > 62) throw ConfigError("cutoff must lie in [1, 62]");
  if (repeaters.empty()) throw ConfigError("repeaters must be nonempty");
  for (int n : repeaters)
    if (n < 0) throw ConfigError("repeaters must be >= 0");
  if (depths.empty()) throw ConfigError("depths must be nonempty");
  const double fv = effective_f();
  if (!(fv >= 0 && fv < 1)) throw ConfigError("f must lie in [0, 1)");
  if (!(p0 > 0 && p0 <= 1)) throw ConfigError("p0 must lie in (0, 1]");
  if (!(p1 > 0 && p1 <= 1)) throw ConfigError("p1 must lie in (0, 1]");
  if (m < 0) throw ConfigError("m must be >= 0");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (bins < 0) throw ConfigError("bins must be >= 0");
  if (streams < 1) throw ConfigError("streams must be >= 1");
}

std::vector<ConfigEntry> describe(const RunConfig& config) {
  std::vector<ConfigEntry> out;
  for (const auto& f : schema()) out.push_back({f.key, f.get(config)});
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : schema()) out.emplace_back(f.key);
  return out;
}

void set_key(RunConfig& config, std::string_view key, std::string_view value) {
  const Field* f = find_field(trim(key));
  if (!f) throw ConfigError("unknown key '" + std::string(trim(key)) + "'");
  try {
    f->set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + std::string(f->key) + "': " + e.what());
  }
}

std::vector<std::string> preset_names() { return {"fig1c", "fig2b", "fig2c", "heatmap-d2"}; }

RunConfig preset(std::string_view name) {
  RunConfig c;
  if (name == "none") return c;
  c.preset = std::string(name);
  if (name == "fig1c") {
    c.f = 2.0 / 3.0;
    c.min_km = 1;
    c.max_km = 500;
    c.step_km = 1;
    c.repeaters = {0, 1};
    c.depths = {0, 1, 2, 3, 4, 5, std::nullopt};
  } else if (name == "fig2b" || name == "fig2c") {
    c.channel = ChannelParams::figure_defaults(name == "fig2b" ? 0.2 : 0.01);
    c.spec.mode = RateMode::Numeric;
    c.min_km = 50;
    c.max_km = 2500;
    c.step_km = 50;
    c.repeaters = {0, 1};
  } else if (name == "heatmap-d2") {
    c.channel.eta_switch = 1;
    c.c_qm_auto = false;
    c.channel.c_qm = kSpeedOfLightKmPerS;
    c.min_km = 100;
    c.max_km = 800;
    c.step_km = 50;
    c.alpha_qm_min = 0;
    c.alpha_qm_max = 0.1;
    c.alpha_qm_step = 0.005;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

void apply_text(RunConfig& config, std::string_view text, std::string_view origin, bool metadata) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> where;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!metadata) continue;
      line = trim(line.substr(1));
      if (line.find('=') == std::string_view::npos) continue;
    } else if (metadata) {
      break;  // header row: metadata is over
    }
    const auto eq = line.find('=');
    const std::string loc = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(loc + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (!find_field(key)) throw ConfigError(loc + ": unknown key '" + std::string(key) + "'");
    pairs.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
    where.push_back(loc);
  }
  apply_pairs(config, pairs, where);
}

void apply_json(RunConfig& config, std::string_view text, std::string_view origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(std::string(origin) + ": top level must be an object");
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> where;
  for (const auto& [key, value] : doc.items()) {
    const std::string loc = std::string(origin) + ": field '" + key + "'";
    if (!find_field(key)) throw ConfigError(loc + ": unknown key");
    auto scalar = [&](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number_integer()) return v.dump();
      if (v.is_number()) return format_double(v.get<double>());
      throw ConfigError(loc + ": expected a string, number or boolean");
    };
    std::string s;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + scalar(value[i]);
    } else {
      s = scalar(value);
    }
    pairs.emplace_back(key, s);
    where.push_back(loc);
  }
  apply_pairs(config, pairs, where);
}

void apply_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string origin = path.string();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    // emitted JSON results carry their config under "config"
    if (!doc.is_discarded() && doc.is_object() && doc.contains("config") && doc["config"].is_object())
      apply_json(config, doc["config"].dump(), origin);
    else
      apply_json(config, text, origin);
  } else {
    apply_text(config, text, origin, text.rfind("# ffqkd", 0) == 0);
  }
}

}  // namespace ffqkd::cli
