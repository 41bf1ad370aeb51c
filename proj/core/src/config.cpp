// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "hqfl/error.hpp"

namespace hqfl {

namespace {

void check_keys(const toml::table& table, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : table) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key.str() == a;
    if (!ok) throw InputError(std::string(where) + ": unknown key '" + std::string(key.str()) + "'");
  }
}

std::string key_path(std::string_view where, std::string_view key) {
  return std::string(where) + "." + std::string(key);
}

std::optional<double> opt_double(const toml::table& t, std::string_view where, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<double>(); v && (node->is_floating_point() || node->is_integer())) return *v;
  throw InputError(key_path(where, key) + " must be a number");
}

double get_double(const toml::table& t, std::string_view where, std::string_view key, double fallback) {
  return opt_double(t, where, key).value_or(fallback);
}

double req_double(const toml::table& t, std::string_view where, std::string_view key) {
  auto v = opt_double(t, where, key);
  if (!v) throw InputError(key_path(where, key) + " is required");
  return *v;
}

std::optional<std::int64_t> opt_int(const toml::table& t, std::string_view where, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (!node->is_integer()) throw InputError(key_path(where, key) + " must be an integer");
  return node->as_integer()->get();
}

int to_int(std::int64_t v, std::string_view where, std::string_view key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw InputError(key_path(where, key) + " is out of range");
  return static_cast<int>(v);
}

std::optional<std::string> opt_string(const toml::table& t, std::string_view where, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (!node->is_string()) throw InputError(key_path(where, key) + " must be a string");
  return node->as_string()->get();
}

std::optional<bool> opt_bool(const toml::table& t, std::string_view where, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (!node->is_boolean()) throw InputError(key_path(where, key) + " must be a boolean");
  return node->as_boolean()->get();
}

const toml::table* opt_table(const toml::table& t, std::string_view where, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return nullptr;
  if (!node->is_table()) throw InputError(key_path(where, key) + " must be a table");
  return node->as_table();
}

const toml::array* opt_array(const toml::table& t, std::string_view where, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return nullptr;
  if (!node->is_array()) throw InputError(key_path(where, key) + " must be an array");
  return node->as_array();
}

void read_hardware(const toml::table& t, std::string_view where, speed::HardwareProfile& hw) {
  check_keys(t, where, {"batch_mem_intercept_mb", "batch_mem_slope_mb", "batch_half_saturation", "qat_overhead_peak"});
  hw.batch_mem_intercept_mb = get_double(t, where, "batch_mem_intercept_mb", hw.batch_mem_intercept_mb);
  if (auto v = opt_double(t, where, "batch_mem_slope_mb")) hw.batch_mem_slope_mb = *v;
  hw.batch_half_saturation = get_double(t, where, "batch_half_saturation", hw.batch_half_saturation);
  hw.qat_overhead_peak = get_double(t, where, "qat_overhead_peak", hw.qat_overhead_peak);
}

sim::DataSource read_data(const toml::table& t, std::string_view where) {
  check_keys(t, where, {"family", "params", "noise_scale"});
  sim::DataSource src;
  const auto family = distfit::parse_family(opt_string(t, where, "family").value_or("Normal"));
  std::vector<double> params;
  const auto names = distfit::param_names(family);
  const auto* table = opt_table(t, where, "params");
  if (!table) {
    if (family != distfit::Family::Normal) throw InputError(key_path(where, "params") + " is required");
    params = {0.0, 1.0};
  } else {
    const auto pw = key_path(where, "params");
    for (const auto& [key, node] : *table) {
      bool ok = false;
      for (auto n : names) ok = ok || key.str() == n;
      if (!ok) {
        throw InputError(pw + ": '" + std::string(key.str()) + "' is not a parameter of " +
                         std::string(distfit::to_string(family)));
      }
    }
    for (auto n : names) params.push_back(req_double(*table, pw, n));
  }
  src.noise = distfit::make(family, std::move(params));
  src.noise_scale = get_double(t, where, "noise_scale", src.noise_scale);
  return src;
}

sim::ClientSpec read_client(const toml::table& t, std::string_view where, const speed::HardwareProfile& defaults) {
  check_keys(t, where,
             {"id", "memory_mb", "compute_gops", "mem_avail_frac", "compute_avail_frac", "data_volume",
              "epochs_per_round", "batch_size", "parent", "bandwidth_mbps", "hardware", "data"});
  sim::ClientSpec c;
  auto id = opt_string(t, where, "id");
  if (!id || id->empty()) throw InputError(key_path(where, "id") + " is required");
  c.profile.id = *id;
  const std::string w = std::string(where) + "[" + *id + "]";
  c.profile.memory_mb = req_double(t, w, "memory_mb");
  c.profile.compute_gops = req_double(t, w, "compute_gops");
  c.profile.mem_avail_frac = get_double(t, w, "mem_avail_frac", 1.0);
  c.profile.compute_avail_frac = get_double(t, w, "compute_avail_frac", 1.0);
  auto volume = opt_int(t, w, "data_volume");
  if (!volume) throw InputError(key_path(w, "data_volume") + " is required");
  c.profile.data_volume = *volume;
  c.profile.epochs_per_round = to_int(opt_int(t, w, "epochs_per_round").value_or(1), w, "epochs_per_round");
  if (auto b = opt_int(t, w, "batch_size")) c.profile.batch_size = to_int(*b, w, "batch_size");
  c.parent = opt_string(t, w, "parent").value_or("");
  if (auto bw = opt_double(t, w, "bandwidth_mbps")) c.bandwidth_mbps = *bw;
  c.hardware = defaults;
  if (const auto* hw = opt_table(t, w, "hardware")) read_hardware(*hw, key_path(w, "hardware"), c.hardware);
  if (const auto* data = opt_table(t, w, "data")) c.data = read_data(*data, key_path(w, "data"));
  return c;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (s == "inf") return "inf";
  if (s == "-inf") return "-inf";
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_string(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (static_cast<unsigned char>(ch) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", static_cast<unsigned>(ch));
      out += buf;
    } else {
      out += ch;
    }
  }
  return out + "\"";
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

void PipelineConfig::validate() const {
  sim.validate();
  dispatch.validate();
  if (!(analysis.reweight_exponent > 0.0 && analysis.reweight_exponent < 1.0))
    throw ExponentOutOfRange("analysis.reweight_exponent must lie in (0, 1)");
  if (analysis.enumeration_cap < 1) throw InputError("analysis.enumeration_cap must be >= 1");
  if (analysis.few_rounds < 1) throw InputError("analysis.few_rounds must be >= 1");
  if (!(analysis.subsample_fraction > 0.0 && analysis.subsample_fraction <= 1.0))
    throw InputError("analysis.subsample_fraction must lie in (0, 1]");
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
  const auto& x = a.dispatch;
  const auto& y = b.dispatch;
  return a.sim == b.sim && x.xi == y.xi && x.area_threshold == y.area_threshold &&
         x.boundary_margin == y.boundary_margin && x.epsilon == y.epsilon && a.analysis == b.analysis &&
         a.run == b.run;
}

PipelineConfig parse_config(std::string_view text, std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source_name << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
       << e.description();
    throw InputError(os.str());
  }
  check_keys(root, "config",
             {"model", "dispatch", "analysis", "simulation", "hardware", "aggregators", "clients", "run"});

  PipelineConfig cfg;
  auto& s = cfg.sim;

  const auto* model = opt_table(root, "config", "model");
  if (!model) throw InputError("config: [model] section is required");
  check_keys(*model, "model", {"layer_widths"});
  const auto* widths = opt_array(*model, "model", "layer_widths");
  if (!widths) throw InputError("model.layer_widths is required");
  for (const auto& w : *widths) {
    if (!w.is_integer()) throw InputError("model.layer_widths must hold integers");
    s.model.layer_widths.push_back(to_int(w.as_integer()->get(), "model", "layer_widths"));
  }

  if (const auto* d = opt_table(root, "config", "dispatch")) {
    check_keys(*d, "dispatch", {"xi", "area_threshold", "boundary_margin", "epsilon"});
    cfg.dispatch.xi = get_double(*d, "dispatch", "xi", cfg.dispatch.xi);
    cfg.dispatch.area_threshold = get_double(*d, "dispatch", "area_threshold", cfg.dispatch.area_threshold);
    cfg.dispatch.boundary_margin = get_double(*d, "dispatch", "boundary_margin", cfg.dispatch.boundary_margin);
    cfg.dispatch.epsilon = get_double(*d, "dispatch", "epsilon", cfg.dispatch.epsilon);
  }

  if (const auto* a = opt_table(root, "config", "analysis")) {
    check_keys(*a, "analysis", {"reweight_exponent", "enumeration_cap", "few_rounds", "subsample_fraction"});
    auto& an = cfg.analysis;
    an.reweight_exponent = get_double(*a, "analysis", "reweight_exponent", an.reweight_exponent);
    if (auto v = opt_int(*a, "analysis", "enumeration_cap")) {
      if (*v < 1 || *v > 30) throw InputError("analysis.enumeration_cap must lie in [1, 30]");
      an.enumeration_cap = static_cast<std::size_t>(*v);
    }
    if (auto v = opt_int(*a, "analysis", "few_rounds")) an.few_rounds = to_int(*v, "analysis", "few_rounds");
    an.subsample_fraction = get_double(*a, "analysis", "subsample_fraction", an.subsample_fraction);
  }

  if (const auto* t = opt_table(root, "config", "simulation")) {
    const std::string_view w = "simulation";
    check_keys(*t, w,
               {"rounds", "global_seed", "comm_bandwidth_mbps", "lambda", "learning_rate", "dirichlet_concentration",
                "test_size", "class_separation", "aggregation_latency_s", "weighting", "quantized_eval",
                "server_id"});
    if (auto v = opt_int(*t, w, "rounds")) s.rounds = to_int(*v, w, "rounds");
    if (auto v = opt_int(*t, w, "global_seed")) {
      if (*v < 0) throw InputError("simulation.global_seed must be >= 0");
      s.global_seed = static_cast<std::uint64_t>(*v);
    }
    s.comm_bandwidth_mbps = get_double(*t, w, "comm_bandwidth_mbps", s.comm_bandwidth_mbps);
    s.lambda = get_double(*t, w, "lambda", s.lambda);
    s.learning_rate = get_double(*t, w, "learning_rate", s.learning_rate);
    s.dirichlet_concentration = get_double(*t, w, "dirichlet_concentration", s.dirichlet_concentration);
    if (auto v = opt_int(*t, w, "test_size")) s.test_size = to_int(*v, w, "test_size");
    s.class_separation = get_double(*t, w, "class_separation", s.class_separation);
    s.aggregation_latency_s = get_double(*t, w, "aggregation_latency_s", s.aggregation_latency_s);
    if (auto v = opt_string(*t, w, "weighting")) s.weighting = sim::parse_weighting(*v);
    if (auto v = opt_bool(*t, w, "quantized_eval")) s.quantized_eval = *v;
    if (auto v = opt_string(*t, w, "server_id")) s.server_id = *v;
  }

  speed::HardwareProfile defaults;
  if (const auto* hw = opt_table(root, "config", "hardware")) read_hardware(*hw, "hardware", defaults);

  if (const auto* aggs = opt_array(root, "config", "aggregators")) {
    for (const auto& node : *aggs) {
      if (!node.is_table()) throw InputError("aggregators entries must be tables");
      const auto& t = *node.as_table();
      check_keys(t, "aggregators", {"id", "parent", "bandwidth_mbps"});
      sim::AggregatorSpec a;
      auto id = opt_string(t, "aggregators", "id");
      if (!id || id->empty()) throw InputError("aggregators.id is required");
      a.id = *id;
      a.parent = opt_string(t, "aggregators", "parent").value_or("");
      if (auto bw = opt_double(t, "aggregators", "bandwidth_mbps")) a.bandwidth_mbps = *bw;
      s.aggregators.push_back(std::move(a));
    }
  }

  const auto* clients = opt_array(root, "config", "clients");
  if (!clients) throw InputError("config: at least one [[clients]] entry is required");
  for (const auto& node : *clients) {
    if (!node.is_table()) throw InputError("clients entries must be tables");
    s.clients.push_back(read_client(*node.as_table(), "clients", defaults));
  }

  if (const auto* r = opt_table(root, "config", "run")) {
    check_keys(*r, "run", {"fine", "baselines"});
    cfg.run.fine = opt_bool(*r, "run", "fine").value_or(false);
    cfg.run.baselines = opt_bool(*r, "run", "baselines").value_or(false);
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_toml(const PipelineConfig& config) {
  std::ostringstream os;
  const auto& s = config.sim;
  os << "[model]\nlayer_widths = [";
  for (std::size_t i = 0; i < s.model.layer_widths.size(); ++i) os << (i ? ", " : "") << s.model.layer_widths[i];
  os << "]\n\n";

  const auto& d = config.dispatch;
  os << "[dispatch]\n"
     << "xi = " << fmt_double(d.xi) << "\n"
     << "area_threshold = " << fmt_double(d.area_threshold) << "\n"
     << "boundary_margin = " << fmt_double(d.boundary_margin) << "\n"
     << "epsilon = " << fmt_double(d.epsilon) << "\n\n";

  const auto& a = config.analysis;
  os << "[analysis]\n"
     << "reweight_exponent = " << fmt_double(a.reweight_exponent) << "\n"
     << "enumeration_cap = " << a.enumeration_cap << "\n"
     << "few_rounds = " << a.few_rounds << "\n"
     << "subsample_fraction = " << fmt_double(a.subsample_fraction) << "\n\n";

  os << "[simulation]\n"
     << "rounds = " << s.rounds << "\n"
     << "global_seed = " << s.global_seed << "\n"
     << "comm_bandwidth_mbps = " << fmt_double(s.comm_bandwidth_mbps) << "\n"
     << "lambda = " << fmt_double(s.lambda) << "\n"
     << "learning_rate = " << fmt_double(s.learning_rate) << "\n"
     << "dirichlet_concentration = " << fmt_double(s.dirichlet_concentration) << "\n"
     << "test_size = " << s.test_size << "\n"
     << "class_separation = " << fmt_double(s.class_separation) << "\n"
     << "aggregation_latency_s = " << fmt_double(s.aggregation_latency_s) << "\n"
     << "weighting = " << fmt_string(sim::to_string(s.weighting)) << "\n"
     << "quantized_eval = " << fmt_bool(s.quantized_eval) << "\n"
     << "server_id = " << fmt_string(s.server_id) << "\n\n";

  os << "[run]\n"
     << "fine = " << fmt_bool(config.run.fine) << "\n"
     << "baselines = " << fmt_bool(config.run.baselines) << "\n";

  for (const auto& ag : s.aggregators) {
    os << "\n[[aggregators]]\nid = " << fmt_string(ag.id) << "\n";
    if (!ag.parent.empty()) os << "parent = " << fmt_string(ag.parent) << "\n";
    if (ag.bandwidth_mbps) os << "bandwidth_mbps = " << fmt_double(*ag.bandwidth_mbps) << "\n";
  }

  for (const auto& c : s.clients) {
    const auto& p = c.profile;
    os << "\n[[clients]]\n"
       << "id = " << fmt_string(p.id) << "\n"
       << "memory_mb = " << fmt_double(p.memory_mb) << "\n"
       << "compute_gops = " << fmt_double(p.compute_gops) << "\n"
       << "mem_avail_frac = " << fmt_double(p.mem_avail_frac) << "\n"
       << "compute_avail_frac = " << fmt_double(p.compute_avail_frac) << "\n"
       << "data_volume = " << p.data_volume << "\n"
       << "epochs_per_round = " << p.epochs_per_round << "\n";
    if (p.batch_size) os << "batch_size = " << *p.batch_size << "\n";
    if (!c.parent.empty()) os << "parent = " << fmt_string(c.parent) << "\n";
    if (c.bandwidth_mbps) os << "bandwidth_mbps = " << fmt_double(*c.bandwidth_mbps) << "\n";

    const auto& hw = c.hardware;
    os << "\n[clients.hardware]\n"
       << "batch_mem_intercept_mb = " << fmt_double(hw.batch_mem_intercept_mb) << "\n";
    if (hw.batch_mem_slope_mb) os << "batch_mem_slope_mb = " << fmt_double(*hw.batch_mem_slope_mb) << "\n";
    os << "batch_half_saturation = " << fmt_double(hw.batch_half_saturation) << "\n"
       << "qat_overhead_peak = " << fmt_double(hw.qat_overhead_peak) << "\n";

    os << "\n[clients.data]\n"
       << "family = " << fmt_string(distfit::to_string(c.data.noise.family)) << "\n"
       << "noise_scale = " << fmt_double(c.data.noise_scale) << "\n"
       << "\n[clients.data.params]\n";
    const auto names = distfit::param_names(c.data.noise.family);
    for (std::size_t i = 0; i < names.size(); ++i) {
      os << names[i] << " = " << fmt_double(c.data.noise.params[i]) << "\n";
    }
  }
  return os.str();
}

}  // namespace hqfl
