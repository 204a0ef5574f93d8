#include "cce/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "cce/error.hpp"
#include "cce/util/digest.hpp"

namespace cce::pipeline {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string canonical_key(std::string_view key) {
  std::string k(key);
  while (!k.empty() && k.front() == '-') k.erase(k.begin());
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return out;
}

long long parse_int(std::string_view key, std::string_view v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected on/off, got '" + std::string(v) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;

template <typename T>
Setter int_field(T RunConfig::*field) {
  return [field](RunConfig& c, std::string_view k, std::string_view v) {
    const auto n = parse_int(k, v);
    if (n < 0) throw ConfigError(std::string(k) + ": must be >= 0");
    c.*field = static_cast<T>(n);
  };
}

Setter double_field(double RunConfig::*field) {
  return [field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_double(k, v); };
}

Setter flag_field(bool AblationFlags::*field) {
  return [field](RunConfig& c, std::string_view k, std::string_view v) { c.ablations.*field = parse_bool(k, v); };
}

Setter path_field(std::optional<std::filesystem::path> RunConfig::*field) {
  return [field](RunConfig& c, std::string_view, std::string_view v) {
    if (v.empty())
      (c.*field).reset();
    else
      c.*field = std::filesystem::path(v);
  };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"input", [](RunConfig& c, std::string_view, std::string_view v) { c.input_description = v; }},
      {"seed", [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_u64(k, v); }},
      {"tau_match", double_field(&RunConfig::tau_match)},
      {"top_k", int_field(&RunConfig::top_k)},
      {"max_fallback_rounds", int_field(&RunConfig::max_fallback_rounds)},
      {"tau_p", double_field(&RunConfig::tau_p)},
      {"min_gap", int_field(&RunConfig::min_gap)},
      {"max_events", int_field(&RunConfig::max_events)},
      {"kappa", double_field(&RunConfig::kappa)},
      {"max_retries", int_field(&RunConfig::max_retries)},
      {"token_budget", int_field(&RunConfig::token_budget)},
      {"minimality_fraction", double_field(&RunConfig::minimality_fraction)},
      {"sigma",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "auto" || v.empty())
           c.sigma.reset();
         else
           c.sigma = parse_double(k, v);
       }},
      {"tau_z_fraction", double_field(&RunConfig::tau_z_fraction)},
      {"noise_mode",
       [](RunConfig& c, std::string_view, std::string_view v) { c.noise_mode = keyframe::noise_mode_from_string(v); }},
      {"target_frames", int_field(&RunConfig::target_frames)},
      {"temporal_compression", int_field(&RunConfig::temporal_compression)},
      {"latent_rate", double_field(&RunConfig::latent_rate)},
      {"operator_band", double_field(&RunConfig::operator_band)},
      {"d_min", double_field(&RunConfig::d_min)},
      {"d_max", double_field(&RunConfig::d_max)},
      {"resolution",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         const auto x = v.find('x');
         if (x == std::string_view::npos) throw ConfigError(std::string(k) + ": expected WIDTHxHEIGHT");
         c.width = static_cast<int>(parse_int(k, v.substr(0, x)));
         c.height = static_cast<int>(parse_int(k, v.substr(x + 1)));
       }},
      {"backends", [](RunConfig& c, std::string_view, std::string_view v) { c.backend = v; }},
      {"token", [](RunConfig& c, std::string_view, std::string_view v) { c.token = v; }},
      {"text_dim", int_field(&RunConfig::text_dim)},
      {"latent_dim", int_field(&RunConfig::latent_dim)},
      {"max_hue_shift", double_field(&RunConfig::max_hue_shift)},
      {"timeout", double_field(&RunConfig::timeout_s)},
      {"pfg", flag_field(&AblationFlags::pfg)},
      {"ppd", flag_field(&AblationFlags::ppd)},
      {"pnr", flag_field(&AblationFlags::pnr)},
      {"iks", flag_field(&AblationFlags::iks)},
      {"emit_package_only",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.emit_package_only = parse_bool(k, v); }},
      {"data_dir", path_field(&RunConfig::data_dir)},
      {"fixtures", path_field(&RunConfig::fixtures)},
      {"cache_dir", path_field(&RunConfig::cache_dir)},
  };
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string k = canonical_key(key);
  for (const auto& [name, setter] : setters()) {
    if (name == k) {
      setter(*this, k, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, setter] : setters()) out.push_back(name);
    return out;
  }();
  return keys;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(!trim(input_description).empty(), "input: description is empty");
  need(seed.has_value(), "seed: a seed is required");
  need(tau_match > 0.0 && tau_match <= 1.0, "tau_match: must lie in (0, 1]");
  need(top_k >= 1, "top_k: must be >= 1");
  need(max_fallback_rounds >= 0, "max_fallback_rounds: must be >= 0");
  need(tau_p > 0.0, "tau_p: must be > 0");
  need(max_events >= 1, "max_events: must be >= 1");
  need(kappa > 0.0, "kappa: must be > 0");
  need(max_retries >= 0, "max_retries: must be >= 0");
  need(token_budget >= 1, "token_budget: must be >= 1");
  need(minimality_fraction > 0.0, "minimality_fraction: must be > 0");
  need(!sigma || *sigma >= 0.0, "sigma: must be >= 0");
  need(tau_z_fraction >= 0.0 && tau_z_fraction <= 1.0, "tau_z_fraction: must lie in [0, 1]");
  need(target_frames >= 1, "target_frames: must be >= 1");
  need(temporal_compression >= 1, "temporal_compression: must be >= 1");
  need(latent_rate > 0.0, "latent_rate: must be > 0");
  need(operator_band >= 0.0 && operator_band <= 1.0, "operator_band: must lie in [0, 1]");
  need(d_min > 0.0 && d_max >= d_min, "d_min/d_max: need 0 < d_min <= d_max");
  need(width > 0 && height > 0, "resolution: must be positive");
  need(!backend.empty(), "backends: endpoint is empty");
  need(text_dim > 0 && latent_dim > 0, "text_dim/latent_dim: must be positive");
  need(latent_dim % 3 == 0 || backend != "mock", "latent_dim: mock latent encoder needs a multiple of 3");
  need(timeout_s > 0.0, "timeout: must be > 0");
}

json RunConfig::to_json() const {
  return {{"input", input_description},
          {"seed", seed ? json(*seed) : json(nullptr)},
          {"tau_match", tau_match},
          {"top_k", top_k},
          {"max_fallback_rounds", max_fallback_rounds},
          {"tau_p", tau_p},
          {"min_gap", min_gap},
          {"max_events", max_events},
          {"kappa", kappa},
          {"max_retries", max_retries},
          {"token_budget", token_budget},
          {"minimality_fraction", minimality_fraction},
          {"sigma", sigma ? json(*sigma) : json(nullptr)},
          {"tau_z_fraction", tau_z_fraction},
          {"noise_mode", keyframe::to_string(noise_mode)},
          {"target_frames", target_frames},
          {"temporal_compression", temporal_compression},
          {"latent_rate", latent_rate},
          {"operator_band", operator_band},
          {"d_min", d_min},
          {"d_max", d_max},
          {"resolution", std::to_string(width) + "x" + std::to_string(height)},
          {"backends", backend},
          {"text_dim", text_dim},
          {"latent_dim", latent_dim},
          {"max_hue_shift", max_hue_shift},
          {"timeout", timeout_s},
          {"ablations", {{"pfg", ablations.pfg}, {"ppd", ablations.ppd}, {"pnr", ablations.pnr}, {"iks", ablations.iks}}},
          {"emit_package_only", emit_package_only}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "ablations") {
      for (const auto& [flag, on] : value.items()) c.set(flag, on.get<bool>() ? "on" : "off");
      continue;
    }
    if (value.is_null()) {
      if (key == "seed") c.seed.reset();
      if (key == "sigma") c.sigma.reset();
      continue;
    }
    if (value.is_string())
      c.set(key, value.get<std::string>());
    else if (value.is_boolean())
      c.set(key, value.get<bool>() ? "on" : "off");
    else if (value.is_number_float())
      c.set(key, value.dump());
    else
      c.set(key, value.dump());
  }
  return c;
}

std::string RunConfig::digest() const { return json_digest(to_json()); }

double RunConfig::effective_sigma() const { return sigma ? *sigma : keyframe::sigma_from_tau(tau_z_fraction); }

std::size_t RunConfig::latent_frames() const {
  return (target_frames - 1) / static_cast<std::size_t>(temporal_compression) + 1;
}

std::filesystem::path default_data_dir() {
#ifdef CCE_INSTALLED_DATA_DIR
  if (std::filesystem::exists(std::filesystem::path(CCE_INSTALLED_DATA_DIR) / "kb.json"))
    return CCE_INSTALLED_DATA_DIR;
#endif
#ifdef CCE_DEFAULT_DATA_DIR
  return CCE_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::filesystem::path RunConfig::resolved_data_dir() const { return data_dir ? *data_dir : default_data_dir(); }

std::vector<backends::BackendDescriptor> RunConfig::descriptors() const {
  std::vector<backends::BackendDescriptor> out;
  using backends::BackendKind;
  for (auto kind : {BackendKind::kReasoning, BackendKind::kTextEncoder, BackendKind::kImageEditor,
                    BackendKind::kLatentEncoder, BackendKind::kDenoiser}) {
    backends::BackendDescriptor d;
    d.kind = kind;
    d.endpoint = backend;
    d.model_id = backend == "mock" ? "mock" : "shim";
    d.timeout_s = timeout_s;
    d.max_retries = 3;
    d.token = token;
    if (kind == BackendKind::kTextEncoder) d.dims["text"] = text_dim;
    if (kind == BackendKind::kLatentEncoder) d.dims["latent"] = latent_dim;
    out.push_back(std::move(d));
  }
  return out;
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = trim(line);
    if (body.empty() || body[0] == '#' || body[0] == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!value.empty() && (value.front() == '"' || value.front() == '\'')) {
      const char q = value.front();
      const auto close = value.find(q, 1);
      if (close == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": unterminated string");
      value = value.substr(1, close - 1);
    } else if (const auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(std::string_view(value).substr(0, hash));
    }
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[canonical_key(key)] = value;
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_key_values(ss.str())) base.set(k, v);
  return base;
}

}  // namespace cce::pipeline
