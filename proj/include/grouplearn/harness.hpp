#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grouplearn/action_dynamics.hpp"
#include "grouplearn/belief_dynamics.hpp"
#include "grouplearn/expfam.hpp"
#include "grouplearn/network.hpp"
#include "grouplearn/rng.hpp"
#include "grouplearn/spectral.hpp"

namespace grouplearn {

using json = nlohmann::ordered_json;

// scenario/config problems; the CLI maps these to exit code 2
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { Action, Belief };

struct Scenario {
  RunMode mode;
  std::optional<DiGraph> graph;
  std::vector<SignalModel> models;
  std::vector<ConjugatePrior> priors;
  std::vector<std::optional<Eigen::VectorXd>> belief_priors;  // belief mode; empty = uniform
  double theta = 0.0;
  std::vector<double> theta_grid;  // belief mode
  std::uint64_t seed = 0;
  long horizon = 0;        // 0 = mode default
  double tolerance = 1e-10;

  int n_agents() const { return static_cast<int>(models.size()); }
};

struct TrajectoryRow {
  long t;
  int agent;
  int component;
  double value;
};

struct RunReport {
  std::vector<TrajectoryRow> trajectory;
  json diagnostics;
};

namespace detail {

inline void reject_unknown_fields(const json& obj, const std::vector<std::string>& allowed,
                                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& a : allowed)
      if (it.key() == a) known = true;
    if (!known) throw ValidationError("unknown field '" + it.key() + "' in " + where);
  }
}

template <typename T>
T require_field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError("missing field '" + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("field '" + key + "' in " + where + " has the wrong type");
  }
}

inline DiGraph parse_graph(const json& g, const std::filesystem::path& base_dir) {
  reject_unknown_fields(g, {"type", "n", "d", "path"}, "graph");
  const auto type = require_field<std::string>(g, "type", "graph");
  if (type == "edge_list") {
    const auto rel = require_field<std::string>(g, "path", "graph");
    std::ifstream in(base_dir / rel);
    if (!in) throw ValidationError("cannot open edge-list file: " + rel);
    try {
      return DiGraph::from_edge_list(in);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("graph.path: ") + e.what());
    }
  }
  const int n = require_field<int>(g, "n", "graph");
  if (n < 1) throw ValidationError("graph.n must be >= 1");
  if (type == "cycle") return DiGraph::cycle(n);
  if (type == "complete") return DiGraph::complete(n);
  if (type == "star") return DiGraph::star(n);
  if (type == "regular") {
    const int d = require_field<int>(g, "d", "graph");
    if (d < 1 || d > n) throw ValidationError("graph.d out of range");
    return DiGraph::regular(n, d);
  }
  throw ValidationError("unknown graph.type '" + type + "'");
}

inline ConjugatePrior parse_prior(const json& p, const std::string& where) {
  reject_unknown_fields(p, {"type", "alpha", "beta"}, where);
  const auto type = require_field<std::string>(p, "type", where);
  if (type == "noninformative") return ConjugatePrior::non_informative();
  if (type == "informative") {
    const double alpha = require_field<double>(p, "alpha", where);
    const double beta = require_field<double>(p, "beta", where);
    try {
      return ConjugatePrior::informative(alpha, beta);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  throw ValidationError("unknown prior type '" + type + "' in " + where);
}

}  // namespace detail

inline Scenario load_scenario_json(const json& doc, const std::filesystem::path& base_dir) {
  detail::reject_unknown_fields(doc,
                                {"mode", "graph", "agents", "theta", "theta_grid", "seed",
                                 "horizon", "tolerance"},
                                "scenario");
  Scenario sc;
  const auto mode = detail::require_field<std::string>(doc, "mode", "scenario");
  if (mode == "action")
    sc.mode = RunMode::Action;
  else if (mode == "belief")
    sc.mode = RunMode::Belief;
  else
    throw ValidationError("mode must be 'action' or 'belief'");

  if (!doc.contains("graph")) throw ValidationError("missing field 'graph' in scenario");
  sc.graph = detail::parse_graph(doc.at("graph"), base_dir);

  if (!doc.contains("agents") || !doc.at("agents").is_array() || doc.at("agents").empty())
    throw ValidationError("scenario needs a non-empty 'agents' array");
  const auto& agents = doc.at("agents");
  if (static_cast<int>(agents.size()) != sc.graph->size())
    throw ValidationError("agent count does not match graph size");

  int idx = 0;
  for (const auto& a : agents) {
    const std::string where = "agents[" + std::to_string(idx) + "]";
    detail::reject_unknown_fields(
        a, {"family", "sigma", "delta", "n_samples", "prior", "belief_prior"}, where);
    const auto family = detail::require_field<std::string>(a, "family", where);
    const int n_samples = detail::require_field<int>(a, "n_samples", where);
    try {
      if (family == "gaussian") {
        const double sigma = detail::require_field<double>(a, "sigma", where);
        if (a.contains("delta") && a.at("delta").get<double>() != sigma)
          throw std::invalid_argument("gaussian requires sigma == delta");
        sc.models.push_back(SignalModel::gaussian(sigma, n_samples));
      } else if (family == "poisson") {
        const double delta = detail::require_field<double>(a, "delta", where);
        if (a.contains("sigma") && a.at("sigma").get<double>() != 1.0)
          throw std::invalid_argument("poisson requires sigma == 1");
        sc.models.push_back(SignalModel::poisson(delta, n_samples));
      } else {
        throw std::invalid_argument("family must be 'gaussian' or 'poisson'");
      }
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (a.contains("prior"))
      sc.priors.push_back(detail::parse_prior(a.at("prior"), where + ".prior"));
    else
      sc.priors.push_back(ConjugatePrior::non_informative());
    try {
      sc.priors.back().validate_for(sc.models.back());
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + ".prior: " + e.what());
    }
    if (a.contains("belief_prior")) {
      const auto v = detail::require_field<std::vector<double>>(a, "belief_prior", where);
      Eigen::VectorXd p(v.size());
      for (std::size_t s = 0; s < v.size(); ++s) p(s) = v[s];
      sc.belief_priors.emplace_back(std::move(p));
    } else {
      sc.belief_priors.emplace_back(std::nullopt);
    }
    ++idx;
  }

  sc.theta = detail::require_field<double>(doc, "theta", "scenario");
  sc.seed = detail::require_field<std::uint64_t>(doc, "seed", "scenario");
  if (doc.contains("horizon")) {
    sc.horizon = detail::require_field<long>(doc, "horizon", "scenario");
    if (sc.horizon < 1) throw ValidationError("horizon must be >= 1");
  }
  if (doc.contains("tolerance")) {
    sc.tolerance = detail::require_field<double>(doc, "tolerance", "scenario");
    if (!(sc.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  }

  if (sc.mode == RunMode::Belief) {
    sc.theta_grid = detail::require_field<std::vector<double>>(doc, "theta_grid", "scenario");
    if (sc.theta_grid.size() < 2) throw ValidationError("theta_grid needs at least 2 states");
    for (const auto& m : sc.models)
      if (m.family() == Family::PoissonExposure)
        for (double th : sc.theta_grid)
          if (!(th > 0.0))
            throw ValidationError("theta_grid must be positive for Poisson agents");
  } else if (doc.contains("theta_grid")) {
    throw ValidationError("theta_grid is only valid in belief mode");
  }

  for (const auto& m : sc.models)
    if (!m.theta_in_domain(sc.theta))
      throw ValidationError("theta outside the domain of an agent's signal family");

  if (sc.mode == RunMode::Belief) {
    for (int i = 0; i < sc.n_agents(); ++i)
      if (sc.belief_priors[i] &&
          sc.belief_priors[i]->size() != static_cast<long>(sc.theta_grid.size()))
        throw ValidationError("agents[" + std::to_string(i) +
                              "].belief_prior length does not match theta_grid");
  }
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("parse error in " + path.string() + ": " + e.what());
  }
  return load_scenario_json(doc, path.has_parent_path() ? path.parent_path()
                                                        : std::filesystem::path("."));
}

namespace detail {

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline std::vector<SampleBatch> draw_batches(const Scenario& sc) {
  std::vector<SampleBatch> batches;
  batches.reserve(sc.n_agents());
  for (int i = 0; i < sc.n_agents(); ++i) {
    AgentRng rng(sc.seed, static_cast<std::uint64_t>(i));
    batches.push_back(sample_signals(sc.models[i], sc.theta, rng));
  }
  return batches;
}

inline RunReport run_action(const Scenario& sc, const std::vector<SampleBatch>& batches,
                            bool trajectories, bool simulate) {
  const DiGraph& g = *sc.graph;
  const int n = sc.n_agents();
  const long horizon = sc.horizon > 0 ? sc.horizon : 10000;

  ActionProfile profile{Eigen::MatrixXd(n, 1), 0};
  for (int i = 0; i < n; ++i)
    profile.actions(i, 0) = time_zero_action(sc.models[i], sc.priors[i], batches[i]);
  const ActionProfile profile0 = profile;

  const InfluenceSystem sys = influence_coefficients(g, sc.models, sc.priors);
  const bool strongly_connected = g.is_strongly_connected();

  RunReport report;
  json& d = report.diagnostics;
  d["mode"] = "action";
  d["n_agents"] = n;
  d["seed"] = sc.seed;
  d["strongly_connected"] = strongly_connected;
  d["time_zero_actions"] = vector_to_json(profile0.actions.col(0));

  d["locally_balanced"] = check_local_balance(g, sc.models);
  d["globally_balanced"] = check_global_balance(sc.models);
  if (strongly_connected) {
    const EfficiencyVerdict verdict = efficiency_check(g, sc.models);
    d["efficiency"] = {{"efficient", verdict.efficient},
                       {"reason", verdict.reason_name()}};
  } else {
    d["efficiency"] = nullptr;
  }

  const DynamicsClass cls = classify_dynamics(sys);
  d["rho_T"] = cls.rho;
  d["dynamics_class"] = cls.kind == DynamicsClass::Kind::Stable     ? "stable"
                        : cls.kind == DynamicsClass::Kind::Marginal ? "marginal"
                                                                    : "unstable";

  const bool row_stochastic =
      ((sys.T.rowwise().sum().array() - 1.0).abs() < 1e-9).all();
  d["row_stochastic"] = row_stochastic;
  if (row_stochastic) {
    d["predicted_consensus"] = consensus_prediction(sys, profile0)(0);
  } else {
    d["predicted_consensus"] = nullptr;
  }

  const Eigen::MatrixXd mvue = global_mvue(sc.models, sc.priors, batches);
  d["global_mvue"] = vector_to_json(mvue.col(0));

  if (!simulate) {
    for (const char* key : {"steps_run", "converged", "diverged", "final_spread",
                            "final_drift", "final_actions", "consensus",
                            "consensus_mvue_gap"})
      d[key] = nullptr;
    return report;
  }

  // time-zero actions live in diagnostics; trajectory rows start at t = 1
  auto record = [&](const ActionProfile& p) {
    if (!trajectories) return;
    for (int i = 0; i < n; ++i) report.trajectory.push_back({p.t, i, 0, p.actions(i, 0)});
  };
  bool converged = action_spread(profile.actions) < sc.tolerance;
  bool diverged = false;
  double drift = 0.0;
  while (!converged && !diverged && profile.t < horizon) {
    ActionProfile next = step_affine(profile, sys);
    drift = (next.actions - profile.actions).cwiseAbs().maxCoeff();
    profile = std::move(next);
    record(profile);
    if (!profile.actions.allFinite()) diverged = true;
    // marginal dynamics with a bias never settle; report spread/drift instead
    else if (action_spread(profile.actions) < sc.tolerance && drift < sc.tolerance)
      converged = true;
  }
  d["steps_run"] = profile.t;
  d["converged"] = converged;
  d["diverged"] = diverged;
  d["final_spread"] = diverged ? json(nullptr) : json(action_spread(profile.actions));
  d["final_drift"] = diverged ? json(nullptr) : json(drift);
  d["final_actions"] =
      diverged ? json(nullptr) : vector_to_json(profile.actions.col(0));
  d["consensus"] = converged ? json(profile.actions(0, 0)) : json(nullptr);
  if (converged) {
    d["consensus_mvue_gap"] =
        (mvue.col(0).array() - profile.actions(0, 0)).abs().maxCoeff();
  } else {
    d["consensus_mvue_gap"] = nullptr;
  }
  return report;
}

inline RunReport run_belief(const Scenario& sc, const std::vector<SampleBatch>& batches,
                            bool trajectories, bool simulate) {
  const DiGraph& g = *sc.graph;
  const int n = sc.n_agents();
  const int m = static_cast<int>(sc.theta_grid.size());
  const long horizon = sc.horizon > 0 ? sc.horizon : 1000;
  const StateSpace space(sc.theta_grid);

  std::vector<Belief> priors;
  priors.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (sc.belief_priors[i]) {
      try {
        priors.push_back(Belief::from_probabilities(*sc.belief_priors[i]));
      } catch (const std::domain_error& e) {
        throw ValidationError("agents[" + std::to_string(i) + "].belief_prior: " + e.what());
      }
    } else {
      priors.push_back(Belief::uniform(m));
    }
  }

  BeliefProfile profile;
  profile.t = 0;
  for (int i = 0; i < n; ++i)
    profile.beliefs.push_back(time_zero_belief(sc.models[i], batches[i], priors[i], space));

  RunReport report;
  json& d = report.diagnostics;
  d["mode"] = "belief";
  d["n_agents"] = n;
  d["seed"] = sc.seed;
  const bool strongly_connected = g.is_strongly_connected();
  d["strongly_connected"] = strongly_connected;
  d["theta_grid"] = sc.theta_grid;

  {
    json tz = json::array();
    for (int i = 0; i < n; ++i) tz.push_back(vector_to_json(profile.beliefs[i].probabilities()));
    d["time_zero_beliefs"] = tz;
  }

  auto record = [&](const BeliefProfile& p) {
    if (!trajectories) return;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd probs = p.beliefs[i].probabilities();
      for (int s = 0; s < m; ++s) report.trajectory.push_back({p.t, i, s, probs(s)});
    }
  };

  bool converged = false;
  while (simulate && !converged && profile.t < horizon) {
    BeliefProfile next = update_step(profile, g, priors);
    double max_tv = 0.0, off_argmax = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd p = profile.beliefs[i].probabilities();
      const Eigen::VectorXd q = next.beliefs[i].probabilities();
      max_tv = std::max(max_tv, total_variation(p, q));
      int arg;
      q.maxCoeff(&arg);
      off_argmax = std::max(off_argmax, 1.0 - q(arg));
    }
    profile = std::move(next);
    record(profile);
    converged = max_tv < 1e-12 || off_argmax < 1e-12;
  }
  d["steps_run"] = simulate ? json(profile.t) : json(nullptr);
  d["converged"] = simulate ? json(converged) : json(nullptr);

  const Belief mu_star = bayesian_aggregate(sc.models, batches, space);
  d["bayesian_aggregate"] = vector_to_json(mu_star.probabilities());

  Eigen::VectorXd uniform_w = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  const std::vector<int> theta_star = weighted_mle_set(sc.models, batches, uniform_w, space);
  d["theta_star"] = theta_star;

  if (strongly_connected) {
    const Centrality cent = centrality(g);
    d["centrality"] = vector_to_json(cent.alpha);
    const std::vector<int> diamond = weighted_mle_set(sc.models, batches, cent.alpha, space);
    d["theta_diamond"] = diamond;
    const LimitBelief limit = asymptotic_prediction(diamond, m);
    d["limit_belief"] = vector_to_json(limit.mass);
    d["polarization_gap"] = total_variation(limit.mass, mu_star.probabilities());
    if (simulate) {
      double final_mass = 0.0;
      const Eigen::VectorXd final_probs = profile.beliefs[0].probabilities();
      for (int s : diamond) final_mass += final_probs(s);
      d["final_mass_on_diamond"] = final_mass;
    } else {
      d["final_mass_on_diamond"] = nullptr;
    }
  } else {
    d["centrality"] = nullptr;
    d["theta_diamond"] = nullptr;
    d["limit_belief"] = nullptr;
    d["polarization_gap"] = nullptr;
    d["final_mass_on_diamond"] = nullptr;
  }
  return report;
}

}  // namespace detail

inline RunReport run(const Scenario& sc, bool trajectories = true) {
  const auto batches = detail::draw_batches(sc);
  return sc.mode == RunMode::Action
             ? detail::run_action(sc, batches, trajectories, true)
             : detail::run_belief(sc, batches, trajectories, true);
}

// diagnostics only: no trajectory iteration at all
inline RunReport diagnose(const Scenario& sc) {
  const auto batches = detail::draw_batches(sc);
  return sc.mode == RunMode::Action ? detail::run_action(sc, batches, false, false)
                                    : detail::run_belief(sc, batches, false, false);
}

enum class EmitFormat { Csv, Json };

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// json: <base>.json with trajectory + diagnostics in one document.
// csv: <base>.csv long-format trajectory plus <base>.diagnostics.json.
inline void emit(const RunReport& report, EmitFormat format,
                 const std::filesystem::path& base) {
  if (format == EmitFormat::Json) {
    json doc;
    doc["trajectory"] = json::array();
    for (const auto& row : report.trajectory)
      doc["trajectory"].push_back(
          {{"t", row.t}, {"agent", row.agent}, {"component", row.component},
           {"value", row.value}});
    doc["diagnostics"] = report.diagnostics;
    std::ofstream out(base.string() + ".json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + base.string() + ".json");
    out << doc.dump(2) << "\n";
    return;
  }
  {
    std::ofstream out(base.string() + ".csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + base.string() + ".csv");
    out << "t,agent,component,value\n";
    for (const auto& row : report.trajectory)
      out << row.t << "," << row.agent << "," << row.component << ","
          << format_double(row.value) << "\n";
  }
  std::ofstream out(base.string() + ".diagnostics.json", std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + base.string() + ".diagnostics.json");
  out << report.diagnostics.dump(2) << "\n";
}

}  // namespace grouplearn
