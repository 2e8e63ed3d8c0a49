#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "orfnet/error.hpp"
#include "orfnet/harness.hpp"

namespace orfnet {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment",
       {"seed", "regime", "horizon", "algorithm", "estimator", "repetitions",
        "eps_f", "theta_grid_points"}},
      {"network",
       {"family", "agents", "edge_probability", "graph_seed", "edges",
        "weights"}},
      {"scenario",
       {"name", "dim", "anchor", "spread", "orbit_radius", "drift",
        "drift_decay", "kappa", "ripple_freq", "offset", "weights",
        "demand_amplitude", "lipschitz_margin"}},
      {"constraints", {"kind", "radius", "lower", "upper", "budget"}},
      {"sweep", {"horizons", "synthetic_exponent", "synthetic_scale"}},
      {"validate", {"delta", "samples", "probes", "t_max"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

bool parse_number(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

bool parse_integer(const std::string& s, long long& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::vector<std::string>& errors() { return errors_; }

  std::optional<std::string> raw(const std::string& sec, const std::string& key) {
    auto s = tree_.get_child_optional(sec);
    if (!s) return std::nullopt;
    auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::optional<double> number(const std::string& sec, const std::string& key) {
    auto v = raw(sec, key);
    if (!v) return std::nullopt;
    double d = 0.0;
    if (!parse_number(*v, d)) {
      errors_.push_back(sec + "." + key + ": malformed number '" + *v + "'");
      return std::nullopt;
    }
    return d;
  }

  std::optional<long long> integer(const std::string& sec,
                                   const std::string& key) {
    auto v = raw(sec, key);
    if (!v) return std::nullopt;
    long long n = 0;
    if (!parse_integer(*v, n)) {
      errors_.push_back(sec + "." + key + ": malformed integer '" + *v + "'");
      return std::nullopt;
    }
    return n;
  }

  std::optional<std::vector<double>> numbers(const std::string& sec,
                                             const std::string& key) {
    auto v = raw(sec, key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& part : split(*v, ',')) {
      double d = 0.0;
      if (!parse_number(part, d)) {
        errors_.push_back(sec + "." + key + ": malformed number '" + part + "'");
        return std::nullopt;
      }
      out.push_back(d);
    }
    return out;
  }

  void require(const std::string& sec, const std::string& key) {
    if (!raw(sec, key)) errors_.push_back(sec + "." + key + " is required");
  }

 private:
  const pt::ptree& tree_;
  std::vector<std::string> errors_;
};

bool regime_accepts(Regime r, SmoothClass c, bool convex, std::string& why) {
  const bool needs_convex =
      r == Regime::ConvexLipschitz || r == Regime::ConvexSmooth;
  const bool needs_smooth =
      r == Regime::ConvexSmooth || r == Regime::NonconvexSmooth;
  if (needs_convex && !convex) {
    why = "a convex scenario";
    return false;
  }
  if (needs_smooth && c != SmoothClass::C11) {
    why = "a C11 scenario";
    return false;
  }
  return true;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("malformed config: ") + e.message() +
                       " (line " + std::to_string(e.line()) + ")"});
  }

  Reader rd(tree);
  auto& err = rd.errors();
  ExperimentConfig cfg;

  for (const auto& [sec, body] : tree) {
    auto it = known_keys().find(sec);
    if (it == known_keys().end()) {
      err.push_back("unknown section [" + sec + "]");
      continue;
    }
    for (const auto& kv : body) {
      if (!it->second.count(kv.first)) {
        err.push_back("unknown key " + sec + "." + kv.first);
      }
    }
  }

  // [experiment]
  rd.require("experiment", "seed");
  if (auto v = rd.raw("experiment", "seed")) {
    unsigned long long s = 0;
    auto r = std::from_chars(v->data(), v->data() + v->size(), s);
    if (r.ec != std::errc() || r.ptr != v->data() + v->size()) {
      err.push_back("experiment.seed: malformed integer '" + *v + "'");
    } else {
      cfg.seed = s;
    }
  }
  rd.require("experiment", "regime");
  std::optional<Regime> regime;
  if (auto v = rd.raw("experiment", "regime")) {
    regime = regime_from_string(*v);
    if (!regime) err.push_back("unknown regime '" + *v + "'");
    else cfg.regime = *regime;
  }
  if (auto v = rd.integer("experiment", "algorithm")) {
    if (*v == 1) cfg.algorithm = Algorithm::One;
    else if (*v == 2) cfg.algorithm = Algorithm::Two;
    else err.push_back("experiment.algorithm must be 1 or 2");
  }
  if (auto v = rd.raw("experiment", "estimator")) {
    auto e = estimator_from_string(*v);
    if (!e) err.push_back("unknown estimator '" + *v + "' (orf | one-point)");
    else cfg.estimator = *e;
  }
  if (auto v = rd.integer("experiment", "repetitions")) {
    if (*v < 1 || *v > 1000000) err.push_back("experiment.repetitions must be >= 1");
    else cfg.repetitions = static_cast<int>(*v);
  }
  long long horizon = 0;
  if (auto v = rd.integer("experiment", "horizon")) {
    if (*v < 1 || *v > 2000000000LL) {
      err.push_back("experiment.horizon must be a positive integer");
      horizon = -1;
    } else {
      horizon = *v;
    }
  } else if (rd.raw("experiment", "horizon")) {
    horizon = -1;  // already reported as malformed
  }
  if (auto v = rd.number("experiment", "eps_f")) {
    if (!(*v > 0.0)) err.push_back("experiment.eps_f must be positive");
    else cfg.eps_f = *v;
  }
  if (regime) {
    if (*regime == Regime::NonconvexLipschitz && !cfg.eps_f &&
        !rd.raw("experiment", "eps_f")) {
      err.push_back("experiment.eps_f is required for NonconvexLipschitz");
    }
    if (*regime != Regime::NonconvexLipschitz && rd.raw("experiment", "eps_f")) {
      err.push_back("experiment.eps_f applies only to NonconvexLipschitz");
    }
  }
  if (auto v = rd.integer("experiment", "theta_grid_points")) {
    if (*v < 2) err.push_back("experiment.theta_grid_points must be >= 2");
    else cfg.theta_grid_points = static_cast<int>(*v);
  }

  // [network]
  NetworkSpec& net = cfg.network;
  rd.require("network", "agents");
  if (auto v = rd.integer("network", "agents")) {
    if (*v < 1 || *v > 100000) err.push_back("network.agents must be >= 1");
    else net.n_agents = static_cast<int>(*v);
  }
  if (auto v = rd.raw("network", "family")) net.family = *v;
  static const std::set<std::string> families = {"ring",  "path",  "complete",
                                                 "erdos", "edges", "matrix"};
  if (!families.count(net.family)) {
    err.push_back("unknown network family '" + net.family + "'");
  }
  if (auto v = rd.number("network", "edge_probability")) {
    if (*v < 0.0 || *v > 1.0) err.push_back("network.edge_probability must be in [0,1]");
    else net.edge_probability = *v;
  }
  if (auto v = rd.integer("network", "graph_seed")) {
    net.graph_seed = static_cast<std::uint64_t>(*v);
  }
  if (net.family == "edges") {
    rd.require("network", "edges");
    if (auto v = rd.raw("network", "edges")) {
      for (const auto& part : split(*v, ',')) {
        if (part.empty()) continue;
        const auto dash = part.find('-');
        long long a = 0;
        long long b = 0;
        if (dash == std::string::npos || !parse_integer(part.substr(0, dash), a) ||
            !parse_integer(part.substr(dash + 1), b)) {
          err.push_back("network.edges: malformed edge '" + part + "'");
          continue;
        }
        if (a < 1 || b < 1 || (net.n_agents > 0 && (a > net.n_agents || b > net.n_agents))) {
          err.push_back("network.edges: index out of 1..N in '" + part + "'");
          continue;
        }
        net.edges.emplace_back(static_cast<int>(a - 1), static_cast<int>(b - 1));
      }
    }
  }
  if (net.family == "matrix") {
    rd.require("network", "weights");
    if (auto v = rd.raw("network", "weights")) {
      std::vector<std::vector<double>> rows;
      bool ok = true;
      for (const auto& line : split(*v, ';')) {
        std::vector<double> row;
        std::istringstream in(line);
        std::string tok;
        while (in >> tok) {
          double x = 0.0;
          if (!parse_number(tok, x)) {
            err.push_back("network.weights: malformed number '" + tok + "'");
            ok = false;
          }
          row.push_back(x);
        }
        rows.push_back(std::move(row));
      }
      const auto n = rows.size();
      for (const auto& r : rows) {
        if (r.size() != n) ok = false;
      }
      if (!ok || n == 0) {
        err.push_back("network.weights must be a square matrix");
      } else if (net.n_agents > 0 && static_cast<int>(n) != net.n_agents) {
        err.push_back("network.weights size does not match network.agents");
      } else {
        Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
          }
        }
        net.weights = m;
      }
    }
  }

  // [scenario]
  ScenarioParams& sc = cfg.scenario;
  rd.require("scenario", "name");
  bool scenario_known = false;
  if (auto v = rd.raw("scenario", "name")) {
    sc.name = *v;
    const auto& names = scenario_names();
    scenario_known = std::find(names.begin(), names.end(), *v) != names.end();
    if (!scenario_known) err.push_back("unknown scenario '" + *v + "'");
  }
  rd.require("scenario", "dim");
  if (auto v = rd.integer("scenario", "dim")) {
    if (*v < 1 || *v > 100000) err.push_back("scenario.dim must be >= 1");
    else sc.dim = static_cast<int>(*v);
  }
  sc.n_agents = std::max(1, net.n_agents);
  if (auto v = rd.numbers("scenario", "anchor")) sc.anchor = *v;
  if (!sc.anchor.empty() && sc.anchor.size() != 1 &&
      static_cast<int>(sc.anchor.size()) != sc.dim) {
    err.push_back("scenario.anchor must have 1 or dim entries");
  }
  auto nonneg = [&](const char* key, double& slot) {
    if (auto v = rd.number("scenario", key)) {
      if (*v < 0.0) err.push_back(std::string("scenario.") + key + " must be >= 0");
      else slot = *v;
    }
  };
  nonneg("spread", sc.spread);
  nonneg("orbit_radius", sc.orbit_radius);
  nonneg("drift", sc.drift);
  nonneg("drift_decay", sc.drift_decay);
  nonneg("kappa", sc.kappa);
  nonneg("demand_amplitude", sc.demand_amplitude);
  if (auto v = rd.number("scenario", "ripple_freq")) {
    if (!(*v > 0.0)) err.push_back("scenario.ripple_freq must be positive");
    else sc.ripple_freq = *v;
  }
  if (auto v = rd.number("scenario", "offset")) sc.offset = *v;
  if (auto v = rd.number("scenario", "lipschitz_margin")) sc.lipschitz_margin = *v;
  if (auto v = rd.numbers("scenario", "weights")) {
    sc.weights = *v;
    if (std::any_of(v->begin(), v->end(), [](double a) { return !(a > 0.0); })) {
      err.push_back("scenario.weights must be positive");
    }
    if (v->size() != 1 && net.n_agents > 0 &&
        static_cast<int>(v->size()) != net.n_agents) {
      err.push_back("scenario.weights must have 1 or N entries");
    }
  }

  if (regime && scenario_known) {
    std::string why;
    if (!regime_accepts(*regime, scenario_class(sc.name),
                        scenario_convex(sc.name), why)) {
      err.push_back("regime " + std::string(to_string(*regime)) + " requires " +
                    why + ", but scenario " + sc.name + " is " +
                    to_string(scenario_class(sc.name)) +
                    (scenario_convex(sc.name) ? " convex" : " non-convex"));
    }
  }

  // [constraints]
  ConstraintSpec& cs = cfg.constraints;
  if (auto v = rd.raw("constraints", "kind")) cs.kind = *v;
  if (cs.kind != "ball" && cs.kind != "box" && cs.kind != "budget") {
    err.push_back("unknown constraint kind '" + cs.kind + "'");
  }
  if (auto v = rd.number("constraints", "radius")) {
    if (!(*v > 0.0)) err.push_back("constraints.radius must be positive");
    else cs.radius = *v;
  }
  if (auto v = rd.numbers("constraints", "lower")) cs.lower = *v;
  if (auto v = rd.numbers("constraints", "upper")) cs.upper = *v;
  if (auto v = rd.number("constraints", "budget")) cs.budget = *v;
  if (cs.kind == "box" || cs.kind == "budget") {
    rd.require("constraints", "lower");
    rd.require("constraints", "upper");
    if (cs.kind == "budget") rd.require("constraints", "budget");
    if (!cs.lower.empty() && !cs.upper.empty()) {
      try {
        build_constraints(cs, sc.dim);
      } catch (const Error& e) {
        err.push_back(std::string("constraints: ") + e.what());
      }
    }
  }

  // [sweep]
  if (auto v = rd.numbers("sweep", "horizons")) {
    bool ok = true;
    for (double h : *v) {
      if (!(h >= 1.0) || h != std::floor(h) || h > 2e9) ok = false;
      cfg.sweep.horizons.push_back(static_cast<int>(h));
    }
    if (!ok) err.push_back("sweep.horizons must be positive integers");
    if (cfg.sweep.horizons.size() < 3) {
      err.push_back("sweep.horizons needs at least 3 entries");
    }
    for (std::size_t k = 1; k < cfg.sweep.horizons.size(); ++k) {
      if (cfg.sweep.horizons[k] <= cfg.sweep.horizons[k - 1]) {
        err.push_back("grid not increasing");
        break;
      }
    }
  }
  if (auto v = rd.number("sweep", "synthetic_exponent")) {
    cfg.sweep.synthetic_exponent = *v;
  }
  if (auto v = rd.number("sweep", "synthetic_scale")) {
    if (!(*v > 0.0)) err.push_back("sweep.synthetic_scale must be positive");
    else cfg.sweep.synthetic_scale = *v;
  }

  if (horizon > 0) {
    sc.horizon = static_cast<int>(horizon);
  } else if (!cfg.sweep.horizons.empty()) {
    sc.horizon = cfg.sweep.horizons.back();
  } else if (horizon == 0) {
    err.push_back("experiment.horizon is required");
  }

  // [validate]
  if (auto v = rd.number("validate", "delta")) {
    if (!(*v > 0.0)) err.push_back("validate.delta must be positive");
    else cfg.validate.delta = *v;
  }
  if (auto v = rd.integer("validate", "samples")) {
    if (*v < 2) err.push_back("validate.samples must be >= 2");
    else cfg.validate.samples = static_cast<int>(*v);
  }
  if (auto v = rd.integer("validate", "probes")) {
    if (*v < 1) err.push_back("validate.probes must be >= 1");
    else cfg.validate.probes = static_cast<int>(*v);
  }
  if (auto v = rd.integer("validate", "t_max")) {
    if (*v < 1) err.push_back("validate.t_max must be >= 1");
    else cfg.validate.t_max = static_cast<int>(*v);
  }

  if (!err.empty()) throw ConfigError(err);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ConstraintSet build_constraints(const ConstraintSpec& spec, int dim) {
  if (spec.kind == "ball") return ConstraintSet::ball(dim, spec.radius);
  auto expand = [dim](const std::vector<double>& v, const char* what) {
    if (v.size() == 1) return Vector::Constant(dim, v[0]).eval();
    if (static_cast<int>(v.size()) != dim) {
      throw_invalid(std::string(what) + " must have 1 or dim entries");
    }
    return Vector(Eigen::Map<const Vector>(v.data(), dim));
  };
  const Vector lo = expand(spec.lower, "lower");
  const Vector hi = expand(spec.upper, "upper");
  if (spec.kind == "box") return ConstraintSet::box(lo, hi);
  if (spec.kind == "budget") return ConstraintSet::budget(lo, hi, spec.budget);
  throw_invalid("unknown constraint kind '" + spec.kind + "'");
}

MixingMatrix build_mixing(const NetworkSpec& spec) {
  if (spec.family == "matrix") {
    if (!spec.weights) throw_invalid("explicit weights missing");
    return MixingMatrix::from_weights(*spec.weights);
  }
  if (spec.family == "edges") {
    return MixingMatrix::metropolis(CommGraph::from_edges(spec.n_agents, spec.edges));
  }
  return MixingMatrix::metropolis(CommGraph::family(
      spec.family, spec.n_agents, spec.edge_probability, spec.graph_seed));
}

}  // namespace orfnet
