#include "wrvi/cli/config.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

namespace wrvi {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end()) {
      throw ConfigError("config: unknown key '" + path + key + "'");
    }
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, const T& fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + path + key + "' has the wrong type");
  }
}

template <class T>
T get_required(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError("config: missing field '" + path + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + path + key + "' has the wrong type");
  }
}

PriorBlock parse_prior_block(const json& obj, const std::string& path) {
  reject_unknown_keys(obj, {"name", "dist", "size", "mean", "variance", "low", "high", "value"},
                      path);
  PriorBlock b;
  b.name = get_required<std::string>(obj, "name", path);
  b.size = get_or<std::size_t>(obj, "size", 1, path);
  const auto dist = get_required<std::string>(obj, "dist", path);
  if (dist == "normal") {
    b.kind = PriorBlock::Kind::normal;
    b.mean = get_or<double>(obj, "mean", 0.0, path);
    b.variance = get_required<double>(obj, "variance", path);
  } else if (dist == "uniform") {
    b.kind = PriorBlock::Kind::uniform;
    b.low = get_required<double>(obj, "low", path);
    b.high = get_required<double>(obj, "high", path);
  } else if (dist == "delta") {
    b.kind = PriorBlock::Kind::delta;
    b.value = get_or<double>(obj, "value", 0.0, path);
  } else {
    throw ConfigError("config: '" + path + "dist' must be normal, uniform, or delta");
  }
  b.validate();
  return b;
}

PriorSpec parse_prior(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError("config: '" + path + "' must be an array of blocks");
  PriorSpec spec;
  std::size_t i = 0;
  for (const auto& e : arr) {
    spec.blocks.push_back(parse_prior_block(e, path + "[" + std::to_string(i) + "]."));
    ++i;
  }
  return spec;
}

json prior_to_json(const PriorSpec& spec) {
  json arr = json::array();
  for (const auto& b : spec.blocks) {
    json e;
    e["name"] = b.name;
    e["size"] = b.size;
    switch (b.kind) {
      case PriorBlock::Kind::normal:
        e["dist"] = "normal";
        e["mean"] = b.mean;
        e["variance"] = b.variance;
        break;
      case PriorBlock::Kind::uniform:
        e["dist"] = "uniform";
        e["low"] = b.low;
        e["high"] = b.high;
        break;
      case PriorBlock::Kind::delta:
        e["dist"] = "delta";
        e["value"] = b.value;
        break;
    }
    arr.push_back(e);
  }
  return arr;
}

ProblemSpec parse_problem(const json& obj) {
  reject_unknown_keys(obj,
                      {"kind", "domain", "mesh_elements", "dirichlet", "solution_order",
                       "kappa_order", "forcing_order", "kappa_transform", "z_prior", "f_prior",
                       "residual_cov", "precondition", "grid", "wave_forcing_terms"},
                      "problem.");
  ProblemSpec spec;
  spec.kind = pde_kind_from_string(get_required<std::string>(obj, "kind", "problem."));
  spec.z_prior = parse_prior(obj.at("z_prior"), "problem.z_prior");
  if (obj.contains("f_prior")) spec.f_prior = parse_prior(obj.at("f_prior"), "problem.f_prior");

  if (obj.contains("residual_cov")) {
    const json& rc = obj.at("residual_cov");
    reject_unknown_keys(rc, {"eps_u", "eps_domain", "eps_boundary", "eps_initial"},
                        "problem.residual_cov.");
    if (rc.contains("eps_u")) {
      spec.residual_cov.uniform = true;
      spec.residual_cov.eps_u = rc.at("eps_u").get<double>();
      if (rc.size() > 1) {
        throw ConfigError("config: residual_cov mixes eps_u with block stdevs");
      }
    } else {
      spec.residual_cov.uniform = false;
      spec.residual_cov.eps_domain = get_required<double>(rc, "eps_domain", "problem.residual_cov.");
      spec.residual_cov.eps_boundary =
          get_required<double>(rc, "eps_boundary", "problem.residual_cov.");
      spec.residual_cov.eps_initial =
          get_required<double>(rc, "eps_initial", "problem.residual_cov.");
    }
  }
  spec.precondition = get_or<bool>(obj, "precondition", false, "problem.");

  if (spec.is_poisson()) {
    auto domain = get_or<std::vector<double>>(obj, "domain", {-1.0, 1.0}, "problem.");
    if (domain.size() != 2 || !(domain[0] < domain[1])) {
      throw ConfigError("config: 'problem.domain' must be [a, b] with a < b");
    }
    const auto elements = get_or<std::size_t>(obj, "mesh_elements", 60, "problem.");
    auto dirichlet = get_or<std::vector<double>>(obj, "dirichlet", {0.0, 0.5}, "problem.");
    if (dirichlet.size() != 2) {
      throw ConfigError("config: 'problem.dirichlet' must be [left, right]");
    }
    spec.mesh = Mesh1D::uniform({domain[0], domain[1]}, elements, dirichlet[0], dirichlet[1]);
    spec.solution_order = get_or<std::size_t>(obj, "solution_order", 9, "problem.");
    spec.kappa_order = get_or<std::size_t>(obj, "kappa_order", 4, "problem.");
    spec.forcing_order = get_or<std::size_t>(obj, "forcing_order", 3, "problem.");
    spec.kappa_transform = transform_from_string(
        get_or<std::string>(obj, "kappa_transform", "softplus", "problem."));
  } else {
    json g = obj.contains("grid") ? obj.at("grid") : json::object();
    reject_unknown_keys(g, {"nx", "nt", "boundary_per_side", "initial", "x_max", "t_final"},
                        "problem.grid.");
    const auto nx = get_or<std::size_t>(g, "nx", 32, "problem.grid.");
    const auto nt = get_or<std::size_t>(g, "nt", 32, "problem.grid.");
    const auto nb = get_or<std::size_t>(g, "boundary_per_side", 32, "problem.grid.");
    const auto nc = get_or<std::size_t>(g, "initial", 32, "problem.grid.");
    spec.x_max = get_or<double>(g, "x_max", 2.0 * 3.14159265358979323846, "problem.grid.");
    spec.t_final = get_or<double>(g, "t_final", 1.0, "problem.grid.");
    spec.grid = CollocationGrid::build(nx, nt, nb, nc, spec.x_max, spec.t_final);
    spec.wave_forcing_terms = get_or<std::size_t>(obj, "wave_forcing_terms", 4, "problem.");
    if (spec.f_dim() != 0) {
      throw ConfigError("config: collocation problems take parameters through z_prior only");
    }
  }
  spec.validate();
  return spec;
}

json problem_to_json(const ProblemSpec& spec) {
  json obj;
  obj["kind"] = pde_kind_to_string(spec.kind);
  obj["z_prior"] = prior_to_json(spec.z_prior);
  if (spec.residual_cov.uniform) {
    obj["residual_cov"] = json{{"eps_u", spec.residual_cov.eps_u}};
  } else {
    obj["residual_cov"] = json{{"eps_domain", spec.residual_cov.eps_domain},
                               {"eps_boundary", spec.residual_cov.eps_boundary},
                               {"eps_initial", spec.residual_cov.eps_initial}};
  }
  obj["precondition"] = spec.precondition;
  if (spec.is_poisson()) {
    obj["f_prior"] = prior_to_json(spec.f_prior);
    obj["domain"] = std::vector<double>{spec.mesh.nodes.front(), spec.mesh.nodes.back()};
    obj["mesh_elements"] = spec.mesh.n_elements();
    obj["dirichlet"] = std::vector<double>{spec.mesh.dirichlet_left, spec.mesh.dirichlet_right};
    obj["solution_order"] = spec.solution_order;
    obj["kappa_order"] = spec.kappa_order;
    obj["forcing_order"] = spec.forcing_order;
    obj["kappa_transform"] = transform_to_string(spec.kappa_transform);
  } else {
    obj["grid"] = json{{"nx", spec.grid.nx},
                       {"nt", spec.grid.nt},
                       {"boundary_per_side", spec.grid.n_boundary() / 2},
                       {"initial", spec.grid.n_initial()},
                       {"x_max", spec.x_max},
                       {"t_final", spec.t_final}};
    obj["wave_forcing_terms"] = spec.wave_forcing_terms;
  }
  return obj;
}

NetworkShape parse_network(const json& obj) {
  reject_unknown_keys(
      obj, {"hidden_width", "hidden_depth", "activation", "logvar_min", "logvar_max"},
      "network.");
  NetworkShape net;
  net.hidden_width = get_or<std::size_t>(obj, "hidden_width", 100, "network.");
  net.hidden_depth = get_or<std::size_t>(obj, "hidden_depth", 4, "network.");
  net.activation =
      ad::activation_from_string(get_or<std::string>(obj, "activation", "swish", "network."));
  net.lv_min = get_or<double>(obj, "logvar_min", kDefaultLogvarMin, "network.");
  net.lv_max = get_or<double>(obj, "logvar_max", kDefaultLogvarMax, "network.");
  if (net.hidden_width == 0 || net.hidden_depth == 0) {
    throw ConfigError("config: network width and depth must be >= 1");
  }
  return net;
}

json network_to_json(const NetworkShape& net) {
  return json{{"hidden_width", net.hidden_width},
              {"hidden_depth", net.hidden_depth},
              {"activation", ad::activation_to_string(net.activation)},
              {"logvar_min", net.lv_min},
              {"logvar_max", net.lv_max}};
}

TrainConfig parse_training(const json& obj) {
  reject_unknown_keys(obj,
                      {"iterations", "mc_samples", "learning_rate", "halving_period", "lr_floor",
                       "seed", "clip_norm", "checkpoint_period", "log_period",
                       "include_prior_constants"},
                      "training.");
  TrainConfig t;
  t.iterations = get_or<std::uint64_t>(obj, "iterations", 1000, "training.");
  t.mc_samples = get_or<int>(obj, "mc_samples", 1, "training.");
  t.learning_rate = get_or<double>(obj, "learning_rate", 1e-3, "training.");
  t.halving_period = get_or<std::uint64_t>(obj, "halving_period", 200000, "training.");
  t.lr_floor = get_or<double>(obj, "lr_floor", 1e-6, "training.");
  t.seed = get_or<std::uint64_t>(obj, "seed", 0, "training.");
  t.clip_norm = get_or<double>(obj, "clip_norm", 100.0, "training.");
  t.checkpoint_period = get_or<std::uint64_t>(obj, "checkpoint_period", 10000, "training.");
  t.log_period = get_or<std::uint64_t>(obj, "log_period", 100, "training.");
  t.include_prior_constants = get_or<bool>(obj, "include_prior_constants", false, "training.");
  t.validate();
  return t;
}

json training_to_json(const TrainConfig& t) {
  return json{{"iterations", t.iterations},
              {"mc_samples", t.mc_samples},
              {"learning_rate", t.learning_rate},
              {"halving_period", t.halving_period},
              {"lr_floor", t.lr_floor},
              {"seed", t.seed},
              {"clip_norm", t.clip_norm},
              {"checkpoint_period", t.checkpoint_period},
              {"log_period", t.log_period},
              {"include_prior_constants", t.include_prior_constants}};
}

EvalConfig parse_evaluation(const json& obj) {
  reject_unknown_keys(obj, {"n_draws", "posterior_samples", "scan", "sweep"}, "evaluation.");
  EvalConfig e;
  e.n_draws = get_or<int>(obj, "n_draws", 100, "evaluation.");
  e.posterior_samples = get_or<int>(obj, "posterior_samples", 64, "evaluation.");
  if (obj.contains("scan")) {
    const json& s = obj.at("scan");
    reject_unknown_keys(s, {"gamma_values", "kappa_values"}, "evaluation.scan.");
    ScanConfig sc;
    sc.gamma_values = get_required<std::vector<double>>(s, "gamma_values", "evaluation.scan.");
    sc.kappa_values = get_required<std::vector<double>>(s, "kappa_values", "evaluation.scan.");
    e.scan = sc;
  }
  if (obj.contains("sweep")) {
    const json& s = obj.at("sweep");
    reject_unknown_keys(s, {"eps_values", "seeds", "iterations", "n_draws"}, "evaluation.sweep.");
    SweepConfig sw;
    sw.eps_values = get_required<std::vector<double>>(s, "eps_values", "evaluation.sweep.");
    if (sw.eps_values.empty()) {
      throw ConfigError("config: 'evaluation.sweep.eps_values' must not be empty");
    }
    sw.seeds = get_or<std::vector<std::uint64_t>>(s, "seeds", {0, 1, 2}, "evaluation.sweep.");
    sw.iterations = get_or<std::uint64_t>(s, "iterations", 10000, "evaluation.sweep.");
    sw.n_draws = get_or<int>(s, "n_draws", 50, "evaluation.sweep.");
    e.sweep = sw;
  }
  return e;
}

json evaluation_to_json(const EvalConfig& e) {
  json obj{{"n_draws", e.n_draws}, {"posterior_samples", e.posterior_samples}};
  if (e.scan) {
    obj["scan"] = json{{"gamma_values", e.scan->gamma_values},
                       {"kappa_values", e.scan->kappa_values}};
  }
  if (e.sweep) {
    obj["sweep"] = json{{"eps_values", e.sweep->eps_values},
                        {"seeds", e.sweep->seeds},
                        {"iterations", e.sweep->iterations},
                        {"n_draws", e.sweep->n_draws}};
  }
  return obj;
}

ObservationConfig parse_observation(const json& obj) {
  reject_unknown_keys(obj,
                      {"operator", "truncation_width", "sigma_y", "dataset", "n_observations",
                       "iterations", "learning_rate", "seed"},
                      "observation.");
  ObservationConfig o;
  const auto op = get_or<std::string>(obj, "operator", "identity", "observation.");
  if (op == "identity") {
    o.model.op = ObservationOperator::identity;
  } else if (op == "middle_truncation") {
    o.model.op = ObservationOperator::middle_truncation;
  } else {
    throw ConfigError("config: 'observation.operator' must be identity or middle_truncation");
  }
  o.model.truncation_width = get_or<std::size_t>(obj, "truncation_width", 20, "observation.");
  o.model.sigma_y = get_or<double>(obj, "sigma_y", 0.01, "observation.");
  o.model.validate();
  o.dataset = get_or<std::string>(obj, "dataset", "synthetic", "observation.");
  o.n_observations = get_or<int>(obj, "n_observations", 100, "observation.");
  o.iterations = get_or<std::uint64_t>(obj, "iterations", 20000, "observation.");
  o.learning_rate = get_or<double>(obj, "learning_rate", 1e-3, "observation.");
  o.seed = get_or<std::uint64_t>(obj, "seed", 0, "observation.");
  return o;
}

json observation_to_json(const ObservationConfig& o) {
  return json{{"operator", o.model.op == ObservationOperator::identity ? "identity"
                                                                       : "middle_truncation"},
              {"truncation_width", o.model.truncation_width},
              {"sigma_y", o.model.sigma_y},
              {"dataset", o.dataset},
              {"n_observations", o.n_observations},
              {"iterations", o.iterations},
              {"learning_rate", o.learning_rate},
              {"seed", o.seed}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  reject_unknown_keys(root, {"problem", "network", "training", "evaluation", "observation",
                             "paths"},
                      "");
  ExperimentConfig config;
  if (!root.contains("problem")) throw ConfigError("config: missing 'problem' block");
  config.problem = parse_problem(root.at("problem"));
  config.network = parse_network(root.contains("network") ? root.at("network") : json::object());
  config.training =
      parse_training(root.contains("training") ? root.at("training") : json::object());
  config.evaluation =
      parse_evaluation(root.contains("evaluation") ? root.at("evaluation") : json::object());
  if (root.contains("observation")) {
    config.observation = parse_observation(root.at("observation"));
  }
  if (root.contains("paths")) {
    const json& p = root.at("paths");
    reject_unknown_keys(p, {"out_dir", "checkpoint"}, "paths.");
    config.paths.out_dir = get_or<std::string>(p, "out_dir", "out", "paths.");
    config.paths.checkpoint = get_or<std::string>(p, "checkpoint", "checkpoint", "paths.");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string serialize_config(const ExperimentConfig& config) {
  json root;
  root["problem"] = problem_to_json(config.problem);
  root["network"] = network_to_json(config.network);
  root["training"] = training_to_json(config.training);
  root["evaluation"] = evaluation_to_json(config.evaluation);
  if (config.observation) root["observation"] = observation_to_json(*config.observation);
  root["paths"] = json{{"out_dir", config.paths.out_dir},
                       {"checkpoint", config.paths.checkpoint}};
  return root.dump(2) + "\n";
}

std::string ExperimentConfig::spec_hash() const {
  const std::string canonical = problem_to_json(problem).dump();
  const auto crc = static_cast<std::uint32_t>(::crc32(
      0L, reinterpret_cast<const Bytef*>(canonical.data()), static_cast<uInt>(canonical.size())));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

}  // namespace wrvi
