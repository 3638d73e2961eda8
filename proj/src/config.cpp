#include "streampca/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace streampca {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", path.empty() ? "<root>" : path, message)),
      path_(std::move(path)) {}

namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

/// Object reader that records which keys were consumed.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  const json& get(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(path(key), "required field is missing");
    return obj_.at(key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  double number(const std::string& key) { return as_number(get(key), path(key)); }

  std::uint64_t count(const std::string& key) { return as_count(get(key), path(key)); }

  std::string string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown field");
    }
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where, "expected a finite number");
    return x;
  }

  static std::uint64_t as_count(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(where, "expected a nonnegative integer");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      // accept 1e5 style literals when integral
      const double x = v.get<double>();
      if (x >= 0.0 && x < 0x1.0p63 && std::floor(x) == x) return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(where, "expected a nonnegative integer");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& where) {
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(where, "expected a nonempty list");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(Fields::as_number(v[i], fmt::format("{}[{}]", where, i)));
    }
    return out;
  }
  return {Fields::as_number(v, where)};
}

std::vector<std::uint64_t> count_list(const json& v, const std::string& where) {
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(where, "expected a nonempty list");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(Fields::as_count(v[i], fmt::format("{}[{}]", where, i)));
    }
    return out;
  }
  return {Fields::as_count(v, where)};
}

StreamConfig parse_stream(const json& doc, const std::string& path,
                          const std::filesystem::path& base_dir) {
  Fields f(doc, path);
  StreamConfig s;
  const std::string type = f.string("type");
  if (type == "synthetic") {
    s.kind = StreamConfig::Kind::synthetic;
    const std::uint64_t d = f.count("dimension");
    if (d < 1) throw ConfigError(f.path("dimension"), "must be >= 1");
    s.synthetic.dimension = static_cast<std::size_t>(d);
    const json* eig = f.find("eigenvalues");
    const json* spectrum = f.find("spectrum");
    if ((eig == nullptr) == (spectrum == nullptr)) {
      throw ConfigError(path, "give exactly one of 'eigenvalues' or 'spectrum'");
    }
    if (eig) {
      if (!eig->is_array()) throw ConfigError(f.path("eigenvalues"), "expected a list");
      s.synthetic.eigenvalues = number_list(*eig, f.path("eigenvalues"));
    } else {
      Fields g(*spectrum, f.path("spectrum"));
      const json& top = g.get("top");
      if (!top.is_array()) throw ConfigError(g.path("top"), "expected a list");
      const auto top_values = number_list(top, g.path("top"));
      const double start = g.number("tail_start");
      const double ratio = g.number("tail_ratio");
      g.finish();
      if (top_values.size() > s.synthetic.dimension) {
        throw ConfigError(g.path("top"), "more values than the dimension");
      }
      if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError(g.path("tail_ratio"), "must lie in (0, 1]");
      s.synthetic.eigenvalues = geometric_spectrum(s.synthetic.dimension, top_values, start, ratio);
    }
    if (const json* rot = f.find("rotation_seed")) {
      if (!rot->is_null()) s.synthetic.rotation_seed = Fields::as_count(*rot, f.path("rotation_seed"));
    }
    try {
      validate(s.synthetic);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(f.path(eig ? "eigenvalues" : "spectrum"), e.what());
    }
  } else if (type == "dataset") {
    s.kind = StreamConfig::Kind::dataset;
    std::filesystem::path p = f.string("path");
    if (p.empty()) throw ConfigError(f.path("path"), "must not be empty");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    s.dataset_path = p.lexically_normal();
  } else {
    throw ConfigError(f.path("type"), fmt::format("unknown stream type '{}'", type));
  }
  f.finish();
  return s;
}

std::string format_value(double v) { return fmt::format("{:g}", v); }

void check_id(const std::string& id, const std::string& where) {
  if (id.empty()) throw ConfigError(where, "id must not be empty");
  for (char c : id) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      throw ConfigError(where, "id must not contain commas, quotes or newlines");
    }
  }
}

std::vector<AlgorithmEntry> parse_algorithm_entry(const json& doc, const std::string& path,
                                            std::size_t k) {
  Fields f(doc, path);
  const std::string name = f.string("algorithm");
  const auto algorithm = parse_algorithm(name);
  if (!algorithm) throw ConfigError(f.path("algorithm"), fmt::format("unknown algorithm '{}'", name));
  std::optional<std::string> explicit_id;
  if (f.has("id")) {
    explicit_id = f.string("id");
    check_id(*explicit_id, f.path("id"));
  }

  std::vector<AlgorithmEntry> out;
  auto add = [&](std::string label, AlgorithmEntry e) {
    e.estimator.k = k;
    e.id = explicit_id ? *explicit_id : fmt::format("{} {}", name, label);
    try {
      validate(e.estimator);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(path, ex.what());
    }
    out.push_back(std::move(e));
  };

  switch (*algorithm) {
    case Algorithm::spca: {
      const auto cs = number_list(f.get("c"), f.path("c"));
      double n0 = 0.0;
      if (f.has("n0")) n0 = f.number("n0");
      for (double c : cs) {
        if (!(c > 0.0)) throw ConfigError(f.path("c"), "must be positive");
        if (!(n0 >= 0.0)) throw ConfigError(f.path("n0"), "must be >= 0");
        add(n0 == 0.0 ? fmt::format("c={}", format_value(c))
                      : fmt::format("c={} n0={}", format_value(c), format_value(n0)),
            AlgorithmEntry{{}, EstimatorConfig::spca(k, c, n0), {}, {}});
      }
      break;
    }
    case Algorithm::alecton: {
      for (double r : number_list(f.get("rate"), f.path("rate"))) {
        if (!(r >= 0.0)) throw ConfigError(f.path("rate"), "must be >= 0");
        add(fmt::format("rate={}", format_value(r)),
            AlgorithmEntry{{}, EstimatorConfig::alecton(k, r), {}, {}});
      }
      break;
    }
    case Algorithm::dbpca: {
      // 0 selects the default of 2k
      std::vector<std::uint64_t> initials{0};
      if (f.has("initial_block")) {
        initials = count_list(f.get("initial_block"), f.path("initial_block"));
        for (std::uint64_t s : initials) {
          if (s < 1) throw ConfigError(f.path("initial_block"), "must be >= 1");
        }
      }
      auto suffix = [](std::uint64_t s) {
        return s == 0 ? std::string() : fmt::format(" initial_block={}", s);
      };
      if (const json* sched = f.find("schedule")) {
        if (f.has("gamma_sq")) throw ConfigError(f.path("schedule"), "conflicts with gamma_sq");
        Fields g(*sched, f.path("schedule"));
        ScheduleParams p;
        p.lambda_k = g.number("lambda_k");
        p.lambda_k1 = g.number("lambda_k1");
        if (g.has("delta0")) p.delta0 = g.number("delta0");
        if (g.has("chernoff_c")) p.chernoff_c = g.number("chernoff_c");
        if (g.has("cbar")) p.cbar = g.number("cbar");
        g.finish();
        p.k = k;
        p.dimension = k;  // replaced by the stream dimension when the plan is built
        if (f.has("initial_block")) {
          throw ConfigError(f.path("initial_block"), "conflicts with schedule");
        }
        EstimatorConfig cfg = EstimatorConfig::dbpca(k, 0.5);
        cfg.dbpca_schedule = p;
        add("theoretical", AlgorithmEntry{{}, cfg, {}, {}});
      } else {
        for (double g : number_list(f.get("gamma_sq"), f.path("gamma_sq"))) {
          if (!(g > 0.0 && g < 1.0)) throw ConfigError(f.path("gamma_sq"), "must lie in (0, 1)");
          for (std::uint64_t s : initials) {
            add(fmt::format("gamma_sq={}{}", format_value(g), suffix(s)),
                AlgorithmEntry{{}, EstimatorConfig::dbpca(k, g, s), {}, {}});
          }
        }
      }
      break;
    }
    case Algorithm::bpca: {
      const bool has_block = f.has("block");
      const bool has_l = f.has("L");
      if (has_block == has_l) throw ConfigError(path, "bpca needs exactly one of 'block' or 'L'");
      std::optional<double> log_base;
      if (f.has("log_base")) {
        log_base = f.number("log_base");
        if (!(*log_base > 0.0) || *log_base == 1.0) {
          throw ConfigError(f.path("log_base"), "must be positive and != 1");
        }
      }
      if (has_block) {
        for (std::uint64_t b : count_list(f.get("block"), f.path("block"))) {
          if (b < 1) throw ConfigError(f.path("block"), "must be >= 1");
          add(fmt::format("block={}", b), AlgorithmEntry{{}, EstimatorConfig::bpca(k, b), {}, {}});
        }
      } else {
        for (double l : number_list(f.get("L"), f.path("L"))) {
          if (!(l > 0.0)) throw ConfigError(f.path("L"), "must be positive");
          // placeholder block until the corpus size is known
          add(fmt::format("L={}", format_value(l)),
              AlgorithmEntry{{}, EstimatorConfig::bpca(k, 1), l, log_base});
        }
      }
      break;
    }
  }
  if (explicit_id && out.size() > 1) {
    throw ConfigError(f.path("id"), "an explicit id cannot be used with a parameter list");
  }
  f.finish();
  return out;
}

}  // namespace

std::vector<double> geometric_spectrum(std::size_t dimension, const std::vector<double>& top,
                                       double tail_start, double tail_ratio) {
  std::vector<double> out(top.begin(), top.end());
  double v = tail_start;
  while (out.size() < dimension) {
    out.push_back(v);
    v *= tail_ratio;
  }
  out.resize(dimension);
  return out;
}

ExperimentConfig parse_experiment_config(const json& doc, const std::filesystem::path& base_dir) {
  Fields f(doc, "");
  ExperimentConfig cfg;
  if (f.has("name")) cfg.name = f.string("name");
  cfg.stream = parse_stream(f.get("stream"), "stream", base_dir);

  const std::uint64_t k = f.count("k");
  if (k < 1) throw ConfigError("k", "must be >= 1");
  if (cfg.stream.kind == StreamConfig::Kind::synthetic && k > cfg.stream.synthetic.dimension) {
    throw ConfigError("k", "exceeds the stream dimension");
  }
  cfg.k = static_cast<std::size_t>(k);

  cfg.points = f.count("points");
  if (cfg.points < 1) throw ConfigError("points", "must be >= 1");

  const json& cps = f.get("checkpoints");
  if (!cps.is_array()) throw ConfigError("checkpoints", "expected a list");
  cfg.checkpoints = count_list(cps, "checkpoints");
  for (std::size_t i = 1; i < cfg.checkpoints.size(); ++i) {
    if (cfg.checkpoints[i] <= cfg.checkpoints[i - 1]) {
      throw ConfigError(fmt::format("checkpoints[{}]", i), "checkpoints must be strictly increasing");
    }
  }
  if (cfg.checkpoints.back() > cfg.points) {
    throw ConfigError("checkpoints", "last checkpoint exceeds the number of points");
  }

  if (const json* des = f.find("designated_checkpoints")) {
    if (!des->is_array()) throw ConfigError("designated_checkpoints", "expected a list");
    cfg.designated_checkpoints = count_list(*des, "designated_checkpoints");
    for (std::size_t i = 0; i < cfg.designated_checkpoints.size(); ++i) {
      if (std::find(cfg.checkpoints.begin(), cfg.checkpoints.end(), cfg.designated_checkpoints[i]) ==
          cfg.checkpoints.end()) {
        throw ConfigError(fmt::format("designated_checkpoints[{}]", i), "not one of the checkpoints");
      }
    }
  } else {
    cfg.designated_checkpoints = {cfg.checkpoints.back()};
  }

  if (f.has("trials")) {
    cfg.trials = static_cast<std::size_t>(f.count("trials"));
    if (cfg.trials < 1) throw ConfigError("trials", "must be >= 1");
  }
  if (f.has("seed")) cfg.seed = f.count("seed");

  if (const json* oracle = f.find("oracle")) {
    Fields g(*oracle, "oracle");
    if (g.has("iterations")) cfg.oracle.iterations = static_cast<std::size_t>(g.count("iterations"));
    if (g.has("seed")) cfg.oracle.seed = g.count("seed");
    if (g.has("tolerance")) cfg.oracle.tolerance = g.number("tolerance");
    g.finish();
    if (cfg.oracle.iterations < 1) throw ConfigError("oracle.iterations", "must be >= 1");
    if (!(cfg.oracle.tolerance >= 0.0)) throw ConfigError("oracle.tolerance", "must be >= 0");
  }

  const json& algs = f.get("algorithms");
  if (!algs.is_array() || algs.empty()) throw ConfigError("algorithms", "expected a nonempty list");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < algs.size(); ++i) {
    const std::string where = fmt::format("algorithms[{}]", i);
    for (auto& entry : parse_algorithm_entry(algs[i], where, cfg.k)) {
      if (!ids.insert(entry.id).second) {
        throw ConfigError(where, fmt::format("duplicate config id '{}'", entry.id));
      }
      cfg.algorithms.push_back(std::move(entry));
    }
  }
  f.finish();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot open config file '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", fmt::format("invalid JSON: {}", e.what()));
  }
  // a run manifest embeds the resolved config
  if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) {
    return parse_experiment_config(doc.at("config"), path.parent_path());
  }
  return parse_experiment_config(doc, path.parent_path());
}

json to_json(const ExperimentConfig& config) {
  json doc;
  doc["name"] = config.name;
  json stream;
  if (config.stream.kind == StreamConfig::Kind::synthetic) {
    stream["type"] = "synthetic";
    stream["dimension"] = config.stream.synthetic.dimension;
    stream["eigenvalues"] = config.stream.synthetic.eigenvalues;
    if (config.stream.synthetic.rotation_seed) {
      stream["rotation_seed"] = *config.stream.synthetic.rotation_seed;
    }
  } else {
    stream["type"] = "dataset";
    stream["path"] = config.stream.dataset_path.string();
  }
  doc["stream"] = stream;
  doc["k"] = config.k;
  doc["points"] = config.points;
  doc["checkpoints"] = config.checkpoints;
  doc["designated_checkpoints"] = config.designated_checkpoints;
  doc["trials"] = config.trials;
  doc["seed"] = config.seed;
  doc["oracle"] = {{"iterations", config.oracle.iterations},
                   {"seed", config.oracle.seed},
                   {"tolerance", config.oracle.tolerance}};

  json algs = json::array();
  for (const auto& a : config.algorithms) {
    const EstimatorConfig& e = a.estimator;
    json j;
    j["id"] = a.id;
    j["algorithm"] = std::string(to_string(e.algorithm));
    switch (e.algorithm) {
      case Algorithm::spca:
        j["c"] = e.spca_c;
        j["n0"] = e.spca_n0;
        break;
      case Algorithm::alecton:
        j["rate"] = e.alecton_rate;
        break;
      case Algorithm::dbpca:
        if (e.dbpca_initial_block > 0) j["initial_block"] = e.dbpca_initial_block;
        if (e.dbpca_schedule) {
          const ScheduleParams& p = *e.dbpca_schedule;
          j["schedule"] = {{"lambda_k", p.lambda_k},   {"lambda_k1", p.lambda_k1},
                           {"delta0", p.delta0},       {"chernoff_c", p.chernoff_c},
                           {"cbar", p.cbar}};
        } else {
          j["gamma_sq"] = e.dbpca_gamma_sq;
        }
        break;
      case Algorithm::bpca:
        if (a.bpca_multiplier) {
          j["L"] = *a.bpca_multiplier;
          if (a.log_base) j["log_base"] = *a.log_base;
        } else {
          j["block"] = e.bpca_block;
        }
        break;
    }
    algs.push_back(std::move(j));
  }
  doc["algorithms"] = std::move(algs);
  return doc;
}

}  // namespace streampca
