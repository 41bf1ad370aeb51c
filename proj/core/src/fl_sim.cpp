// Copyright 2026 The hqfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "hqfl/fl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "hqfl/error.hpp"
#include "hqfl/rng.hpp"

namespace hqfl::sim {

namespace {

struct Standardizer {
  double center = 0.0;
  double scale = 1.0;
};

// Moments when they exist, quantile-based center and spread otherwise.
Standardizer standardizer_for(const distfit::Distribution& d) {
  const auto m = distfit::analytic_moments(d);
  Standardizer s;
  s.center = m.mean_defined ? m.mean : distfit::quantile(d, 0.5);
  if (m.scale_defined && m.scale > 0.0) {
    s.scale = m.scale;
  } else {
    const double iqr = distfit::quantile(d, 0.75) - distfit::quantile(d, 0.25);
    s.scale = iqr > 0.0 ? iqr / 1.349 : 1.0;
  }
  return s;
}

// Largest-remainder split of `total` by `weights`, ties to the lower index.
std::vector<std::int64_t> apportion(std::int64_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> counts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> rema;
  std::int64_t used = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = sum > 0.0 ? total * weights[k] / sum : static_cast<double>(total) / weights.size();
    counts[k] = static_cast<std::int64_t>(std::floor(exact));
    used += counts[k];
    rema.push_back({exact - std::floor(exact), k});
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < total; ++i, ++used) counts[rema[i % rema.size()].second] += 1;
  return counts;
}

std::vector<double> dirichlet(double concentration, int k, Rng& rng) {
  std::gamma_distribution<double> g(concentration, 1.0);
  std::vector<double> out(k);
  double sum = 0.0;
  for (auto& v : out) {
    v = g(rng);
    sum += v;
  }
  if (!(sum > 0.0)) return std::vector<double>(k, 1.0 / k);
  for (auto& v : out) v /= sum;
  return out;
}

// Fills rows of `ds` for the given labels using the client's noise source.
void emit_rows(const ClientSpec& client, const std::vector<int>& labels,
               const std::vector<std::vector<double>>& centers, std::uint64_t seed, std::string_view purpose,
               nn::Dataset& ds) {
  const std::size_t dim = ds.dim;
  const auto st = standardizer_for(client.data.noise);
  std::vector<std::vector<double>> noise(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const auto s = derive_seed(seed, client.profile.id, std::string(purpose) + "/feature/" + std::to_string(j));
    noise[j] = distfit::sample(client.data.noise, labels.size(), s);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double z = (noise[j][i] - st.center) / st.scale;
      ds.features.push_back(centers[labels[i]][j] + client.data.noise_scale * z);
    }
    ds.labels.push_back(labels[i]);
  }
}

double path_link_time(const SimConfig& config, const std::vector<std::string>& path, std::int64_t bytes) {
  double t = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    t += static_cast<double>(bytes) * 8.0 / (config.link_bandwidth(path[i]) * 1e6);
  }
  return t;
}

}  // namespace

std::string_view to_string(Weighting w) { return w == Weighting::Volume ? "volume" : "uniform"; }

Weighting parse_weighting(std::string_view text) {
  if (text == "volume") return Weighting::Volume;
  if (text == "uniform") return Weighting::Uniform;
  throw InputError("unknown aggregation weighting '" + std::string(text) + "'");
}

void SimConfig::validate() const {
  if (rounds < 1) throw InputError("rounds must be >= 1");
  if (!(comm_bandwidth_mbps > 0.0)) throw InputError("comm_bandwidth_mbps must be > 0");
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
  if (!(dirichlet_concentration > 0.0)) throw InputError("dirichlet_concentration must be > 0");
  if (test_size < 1) throw InputError("test_size must be >= 1");
  if (!(aggregation_latency_s >= 0.0)) throw InputError("aggregation_latency_s must be >= 0");
  model.validate();
  if (model.layer_widths.back() < 2) throw InputError("the model needs at least two output classes");
  if (clients.size() < 2) throw InputError("at least two clients are required");
  for (const auto& c : clients) {
    c.profile.validate();
    c.hardware.validate();
    c.data.noise.validate();
    if (!(c.data.noise_scale > 0.0)) throw InputError("client '" + c.profile.id + "': noise_scale must be > 0");
    if (c.bandwidth_mbps && !(*c.bandwidth_mbps > 0.0))
      throw InputError("client '" + c.profile.id + "': bandwidth_mbps must be > 0");
  }
  for (const auto& a : aggregators) {
    if (a.bandwidth_mbps && !(*a.bandwidth_mbps > 0.0))
      throw InputError("aggregator '" + a.id + "': bandwidth_mbps must be > 0");
  }
  std::set<std::string> known{server_id};
  for (const auto& a : aggregators) {
    if (!known.insert(a.id).second) throw InputError("duplicate node id '" + a.id + "'");
  }
  for (const auto& c : clients) {
    if (!known.insert(c.profile.id).second) throw InputError("duplicate node id '" + c.profile.id + "'");
  }
  for (const auto& a : aggregators) {
    if (!a.parent.empty() && !known.contains(a.parent))
      throw InputError("aggregator '" + a.id + "': unknown parent '" + a.parent + "'");
  }
  for (const auto& c : clients) {
    if (!c.parent.empty() && !known.contains(c.parent))
      throw InputError("client '" + c.profile.id + "': unknown parent '" + c.parent + "'");
  }
  const auto tree = topology();
  if (tree.client_ids().size() != clients.size()) throw InputError("the aggregation tree is not connected to the server");
  const auto violations = validate_topology(tree);
  if (!violations.empty()) {
    throw InputError("invalid topology at node '" + violations.front().node_id + "': " + violations.front().message);
  }
}

Topology SimConfig::topology() const {
  // Children keyed by parent id; built recursively from the server.
  std::map<std::string, std::vector<std::pair<std::string, NodeRole>>> children;
  for (const auto& a : aggregators)
    children[a.parent.empty() ? server_id : a.parent].push_back({a.id, NodeRole::Aggregator});
  for (const auto& c : clients)
    children[c.parent.empty() ? server_id : c.parent].push_back({c.profile.id, NodeRole::Client});
  for (auto& [parent, list] : children) std::sort(list.begin(), list.end());

  std::set<std::string> visiting;
  std::function<TopologyNode(const std::string&, NodeRole)> build = [&](const std::string& id, NodeRole role) {
    TopologyNode node{id, role, {}};
    if (!visiting.insert(id).second) return node;  // cycle guard
    if (auto it = children.find(id); it != children.end()) {
      for (const auto& [cid, crole] : it->second) node.children.push_back(build(cid, crole));
    }
    return node;
  };
  return Topology(build(server_id, NodeRole::Server));
}

std::vector<std::string> SimConfig::client_ids() const {
  std::vector<std::string> ids;
  for (const auto& c : clients) ids.push_back(c.profile.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

const ClientSpec& SimConfig::client(std::string_view id) const {
  for (const auto& c : clients) {
    if (c.profile.id == id) return c;
  }
  throw UnknownClient("unknown client '" + std::string(id) + "'");
}

double SimConfig::link_bandwidth(std::string_view node_id) const {
  for (const auto& c : clients) {
    if (c.profile.id == node_id) return c.bandwidth_mbps.value_or(comm_bandwidth_mbps);
  }
  for (const auto& a : aggregators) {
    if (a.id == node_id) return a.bandwidth_mbps.value_or(comm_bandwidth_mbps);
  }
  return comm_bandwidth_mbps;
}

SyntheticDataset generate_data(const SimConfig& config) {
  SyntheticDataset out;
  const int k = config.num_classes();
  const std::size_t dim = config.feature_dim();

  Rng center_rng(derive_seed(config.global_seed, "class-centers"));
  std::normal_distribution<double> center_dist(0.0, config.class_separation);
  out.class_centers.assign(k, std::vector<double>(dim));
  for (auto& c : out.class_centers) {
    for (auto& v : c) v = center_dist(center_rng);
  }

  for (const auto& id : config.client_ids()) {
    const auto& client = config.client(id);
    Rng rng(derive_seed(config.global_seed, id, "labels"));
    const auto props = dirichlet(config.dirichlet_concentration, k, rng);
    const auto counts = apportion(client.profile.data_volume, props);
    std::vector<int> labels;
    for (int c = 0; c < k; ++c) labels.insert(labels.end(), counts[c], c);
    std::shuffle(labels.begin(), labels.end(), rng);

    nn::Dataset ds;
    ds.dim = dim;
    ds.num_classes = k;
    emit_rows(client, labels, out.class_centers, config.global_seed, "train", ds);
    out.clients.emplace(id, std::move(ds));
  }

  // Pooled IID test split: uniform client and uniform class per row.
  const auto ids = config.client_ids();
  Rng rng(derive_seed(config.global_seed, "test-split"));
  std::uniform_int_distribution<std::size_t> pick_client(0, ids.size() - 1);
  std::uniform_int_distribution<int> pick_class(0, k - 1);
  std::vector<std::vector<int>> per_client(ids.size());
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (int i = 0; i < config.test_size; ++i) {
    const auto c = pick_client(rng);
    order.push_back({c, per_client[c].size()});
    per_client[c].push_back(pick_class(rng));
  }
  std::vector<nn::Dataset> parts(ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c) {
    parts[c].dim = dim;
    parts[c].num_classes = k;
    emit_rows(config.client(ids[c]), per_client[c], out.class_centers, config.global_seed, "test", parts[c]);
  }
  out.test.dim = dim;
  out.test.num_classes = k;
  for (const auto& [c, i] : order) {
    const auto r = parts[c].row(i);
    out.test.features.insert(out.test.features.end(), r.begin(), r.end());
    out.test.labels.push_back(parts[c].labels[i]);
  }
  return out;
}

nn::Dataset stratified_subsample(const nn::Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("subsample fraction must lie in (0, 1]");
  if (fraction == 1.0 || data.size() == 0) return data;
  std::vector<std::vector<std::size_t>> by_class(std::max(data.num_classes, 1));
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<double> weights;
  for (const auto& rows : by_class) weights.push_back(static_cast<double>(rows.size()));
  const auto target = std::max<std::int64_t>(1, std::llround(fraction * static_cast<double>(data.size())));
  const auto counts = apportion(target, weights);
  Rng rng(seed);
  std::vector<std::size_t> picked;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto rows = by_class[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto take = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(counts[c]));
    picked.insert(picked.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(picked.begin(), picked.end());
  return data.subset(picked);
}

std::int64_t payload_bytes(const std::vector<quant::QuantizedTensor>& tensors) {
  std::int64_t total = 0;
  for (const auto& t : tensors) total += t.wire_bytes();
  return total;
}

ClientRoundResult client_round(const ClientSpec& client, const ModelSpec& model,
                               const std::vector<quant::QuantizedTensor>& global_weights,
                               QuantStrategy strategy, const nn::Dataset& data, const RoundHyper& hyper) {
  std::vector<std::vector<double>> tensors;
  for (const auto& t : global_weights) tensors.push_back(quant::dequantize(t));
  auto net = nn::Mlp::from_tensors(model, tensors);

  const int batch = speed::select_batch_size(client.profile, client.hardware, model);
  ClientRoundResult result;
  for (int e = 0; e < client.profile.epochs_per_round; ++e) {
    nn::TrainHyper th;
    th.lr = hyper.lr;
    th.batch = batch;
    th.seed = derive_seed(hyper.global_seed, client.profile.id,
                          "round/" + std::to_string(hyper.round_index) + "/epoch/" + std::to_string(e));
    nn::EpochResult er;
    if (strategy == QuantStrategy::QAT) {
      const auto act = nn::calibrate_activations(net, data);
      er = nn::train_epoch_qat(std::move(net), data, th, act);
    } else {
      er = nn::train_epoch_ptq(std::move(net), data, th);
    }
    net = std::move(er.model);
    result.last_epoch_loss = er.mean_loss;
  }

  const auto shapes = net.tensor_shapes();
  const auto trained = net.tensors();
  for (std::size_t i = 0; i < trained.size(); ++i) {
    result.weights.push_back(quant::quantize_calibrated(trained[i], shapes[i]));
  }
  result.bytes_up = payload_bytes(result.weights);
  result.train_time_s = speed::training_time(client.profile, client.hardware, model, strategy);
  return result;
}

std::vector<double> aggregation_weights(std::span<const double> volumes, Weighting weighting) {
  if (volumes.empty()) throw InputError("aggregation needs at least one child");
  std::vector<double> w(volumes.size(), 1.0);
  if (weighting == Weighting::Volume) {
    for (std::size_t i = 0; i < volumes.size(); ++i) {
      if (!(volumes[i] > 0.0)) throw InputError("aggregation volumes must be > 0");
      w[i] = volumes[i];
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

quant::QuantizedTensor aggregate(std::span<const TensorUpdate> children, Weighting weighting) {
  if (children.empty()) throw InputError("aggregation needs at least one child");
  std::vector<double> volumes;
  for (const auto& c : children) {
    if (c.tensor.shape != children.front().tensor.shape) throw ShapeMismatch("aggregated tensors differ in shape");
    volumes.push_back(c.volume);
  }
  const auto w = aggregation_weights(volumes, weighting);
  std::vector<double> mean(children.front().tensor.codes.size(), 0.0);
  for (std::size_t c = 0; c < children.size(); ++c) {
    const auto values = quant::dequantize(children[c].tensor);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += w[c] * values[i];
  }
  return quant::quantize_calibrated(mean, children.front().tensor.shape);
}

std::vector<quant::QuantizedTensor> aggregate_model(std::span<const ModelUpdate> children, Weighting weighting) {
  if (children.empty()) throw InputError("aggregation needs at least one child");
  const std::size_t n = children.front().tensors.size();
  std::vector<quant::QuantizedTensor> out;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<TensorUpdate> column;
    for (const auto& c : children) {
      if (c.tensors.size() != n) throw ShapeMismatch("children carry different tensor counts");
      column.push_back({c.tensors[t], c.volume});
    }
    out.push_back(aggregate(column, weighting));
  }
  return out;
}

double SimResult::total_wall_clock_s() const {
  double total = 0.0;
  for (const auto& r : rounds) total += r.wall_clock_s;
  return total;
}

SimResult run(const SimConfig& config, const StrategyAssignment& assignment, const RunOptions& options) {
  config.validate();
  return run(config, generate_data(config), assignment, options);
}

SimResult run(const SimConfig& config, const SyntheticDataset& data, const StrategyAssignment& assignment,
              const RunOptions& options) {
  config.validate();
  const auto topology = config.topology();
  if (const auto gaps = assignment_gaps(assignment, topology); !gaps.empty()) {
    throw InputError("assignment does not match the clients; first mismatch: '" + gaps.front() + "'");
  }
  const int rounds = options.rounds.value_or(config.rounds);
  if (rounds < 1) throw InputError("rounds must be >= 1");

  std::map<std::string, nn::Dataset> train;
  for (const auto& [id, ds] : data.clients) {
    train.emplace(id, options.data_fraction < 1.0
                          ? stratified_subsample(ds, options.data_fraction,
                                                 derive_seed(config.global_seed, id, "subsample"))
                          : ds);
  }

  const nn::Mlp init(config.model, derive_seed(config.global_seed, "model-init"));
  std::vector<quant::QuantizedTensor> global;
  {
    const auto shapes = init.tensor_shapes();
    const auto tensors = init.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) global.push_back(quant::quantize_calibrated(tensors[i], shapes[i]));
  }

  SimResult result;
  for (int r = 1; r <= rounds; ++r) {
    RoundRecord rec;
    rec.round = r;
    const std::int64_t down_bytes = payload_bytes(global);
    std::map<std::string, ClientRoundResult> uplinks;
    for (const auto& id : config.client_ids()) {
      const auto& client = config.client(id);
      const RoundHyper hyper{config.learning_rate, r, config.global_seed};
      auto out = client_round(client, config.model, global, assignment.at(id).strategy, train.at(id), hyper);

      const auto path = topology.path_to(id);
      ClientRoundStats st;
      st.train_time_s = out.train_time_s;
      st.bytes_up = out.bytes_up;
      st.bytes_down = down_bytes;
      st.comm_time_s = path_link_time(config, path, down_bytes) + path_link_time(config, path, out.bytes_up);
      st.completion_s = st.train_time_s + st.comm_time_s +
                        config.aggregation_latency_s * static_cast<double>(path.size() - 1);
      rec.wall_clock_s = std::max(rec.wall_clock_s, st.completion_s);
      rec.clients.emplace(id, st);
      uplinks.emplace(id, std::move(out));
    }

    std::function<ModelUpdate(const TopologyNode&)> reduce = [&](const TopologyNode& node) {
      if (node.role == NodeRole::Client) {
        return ModelUpdate{uplinks.at(node.id).weights,
                           static_cast<double>(config.client(node.id).profile.data_volume)};
      }
      std::vector<ModelUpdate> kids;
      double volume = 0.0;
      for (const auto& child : node.children) {
        kids.push_back(reduce(child));
        volume += kids.back().volume;
      }
      return ModelUpdate{aggregate_model(kids, config.weighting), volume};
    };
    global = reduce(topology.root()).tensors;

    std::vector<std::vector<double>> tensors;
    for (const auto& t : global) tensors.push_back(quant::dequantize(t));
    const auto eval = nn::evaluate(nn::Mlp::from_tensors(config.model, tensors), data.test, config.quantized_eval);
    rec.accuracy = eval.accuracy;
    rec.loss = eval.loss;
    if (options.on_round) options.on_round(rec);
    result.rounds.push_back(std::move(rec));
  }
  result.final_weights = std::move(global);
  return result;
}

std::string to_jsonl(const RoundRecord& record) {
  nlohmann::json j;
  j["round"] = record.round;
  j["client_times"] = nlohmann::json::object();
  j["bytes_up"] = nlohmann::json::object();
  j["bytes_down"] = nlohmann::json::object();
  for (const auto& [id, st] : record.clients) {
    j["client_times"][id] = st.train_time_s;
    j["bytes_up"][id] = st.bytes_up;
    j["bytes_down"][id] = st.bytes_down;
  }
  j["wall_clock_s"] = record.wall_clock_s;
  j["accuracy"] = record.accuracy;
  j["loss"] = record.loss;
  return j.dump();
}

RoundRecord parse_jsonl_line(std::string_view line) {
  RoundRecord rec;
  try {
    const auto j = nlohmann::json::parse(line);
    rec.round = j.at("round").get<int>();
    for (const auto& [id, t] : j.at("client_times").items()) rec.clients[id].train_time_s = t.get<double>();
    for (const auto& [id, b] : j.at("bytes_up").items()) rec.clients[id].bytes_up = b.get<std::int64_t>();
    for (const auto& [id, b] : j.at("bytes_down").items()) rec.clients[id].bytes_down = b.get<std::int64_t>();
    rec.wall_clock_s = j.at("wall_clock_s").get<double>();
    rec.accuracy = j.at("accuracy").get<double>();
    rec.loss = j.at("loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed event log line: ") + e.what());
  }
  return rec;
}

}  // namespace hqfl::sim
