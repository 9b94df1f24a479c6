#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "grouplearn/expfam.hpp"
#include "grouplearn/network.hpp"
#include "grouplearn/spectral.hpp"

namespace grouplearn {

// (T, epsilon): social influence matrix supported on the neighborhood
// structure, and the per-agent bias correcting for neighbors' proper priors.
struct InfluenceSystem {
  Eigen::MatrixXd T;        // n x n
  Eigen::MatrixXd epsilon;  // n x k
};

struct ActionProfile {
  Eigen::MatrixXd actions;  // n x k, row i = agent i's action
  long t = 0;
};

struct DynamicsClass {
  enum class Kind { Stable, Marginal, Unstable };
  Kind kind;
  double rho;
  Eigen::MatrixXd equilibrium;  // Stable: (I-T)^{-1} epsilon
  Eigen::MatrixXd projector;    // Marginal: rank-one limit of T^t
};

inline InfluenceSystem influence_coefficients(const DiGraph& graph,
                                              const std::vector<SignalModel>& models,
                                              const std::vector<ConjugatePrior>& priors) {
  const int n = graph.size();
  if (static_cast<int>(models.size()) != n || static_cast<int>(priors.size()) != n)
    throw std::invalid_argument("models/priors must have one entry per agent");
  for (int i = 0; i < n; ++i) priors[i].validate_for(models[i]);

  InfluenceSystem sys;
  sys.T = Eigen::MatrixXd::Zero(n, n);
  sys.epsilon = Eigen::MatrixXd::Zero(n, 1);
  for (int i = 0; i < n; ++i) {
    double neighborhood_mass = priors[i].beta();
    for (int p : graph.in_neighborhood(i))
      neighborhood_mass += models[p].n_samples() * models[p].delta();
    const double scale = models[i].delta() / (models[i].sigma() * neighborhood_mass);
    for (int j : graph.in_neighborhood(i)) {
      sys.T(i, j) = scale * models[j].sigma() *
                    (models[j].n_samples() + priors[j].beta() / models[j].delta());
      if (j != i) sys.epsilon(i, 0) -= scale * priors[j].alpha();
    }
  }
  return sys;
}

inline ActionProfile step_affine(const ActionProfile& profile, const InfluenceSystem& sys) {
  if (profile.actions.rows() != sys.T.rows())
    throw std::invalid_argument("profile/system dimension mismatch");
  return {sys.T * profile.actions + sys.epsilon, profile.t + 1};
}

inline DynamicsClass classify_dynamics(const InfluenceSystem& sys, double tol_band = 1e-9) {
  DynamicsClass c;
  PerronPair p = perron_pair(sys.T);
  c.rho = p.rho;
  const int n = static_cast<int>(sys.T.rows());
  if (c.rho < 1.0 - tol_band) {
    c.kind = DynamicsClass::Kind::Stable;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - sys.T;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    if (!lu.isInvertible()) throw std::runtime_error("I - T is singular despite rho < 1");
    c.equilibrium = lu.solve(sys.epsilon);
  } else if (c.rho <= 1.0 + tol_band) {
    c.kind = DynamicsClass::Kind::Marginal;
    c.projector = p.projector();
  } else {
    c.kind = DynamicsClass::Kind::Unstable;
  }
  return c;
}

// Assumption on per-neighborhood sigma/delta harmony: for every i,
// delta_i / sigma_i == (sum_j delta_j n_j) / (sum_j sigma_j n_j) over N_i
inline bool check_local_balance(const DiGraph& graph,
                                const std::vector<SignalModel>& models,
                                double rel_tol = 1e-12) {
  for (int i = 0; i < graph.size(); ++i) {
    double delta_sum = 0.0, sigma_sum = 0.0;
    for (int j : graph.in_neighborhood(i)) {
      delta_sum += models[j].delta() * models[j].n_samples();
      sigma_sum += models[j].sigma() * models[j].n_samples();
    }
    const double lhs = models[i].delta() * sigma_sum;
    const double rhs = models[i].sigma() * delta_sum;
    if (std::abs(lhs - rhs) > rel_tol * std::max(std::abs(lhs), std::abs(rhs)))
      return false;
  }
  return true;
}

inline bool check_global_balance(const std::vector<SignalModel>& models,
                                 double rel_tol = 1e-12) {
  const double c0 = models.at(0).delta() / models.at(0).sigma();
  for (const auto& m : models) {
    const double c = m.delta() / m.sigma();
    if (std::abs(c - c0) > rel_tol * std::max(std::abs(c), std::abs(c0))) return false;
  }
  return true;
}

struct ConsensusRun {
  ActionProfile profile;
  bool converged;
};

inline double action_spread(const Eigen::MatrixXd& actions) {
  return (actions.colwise().maxCoeff() - actions.colwise().minCoeff()).maxCoeff();
}

inline ConsensusRun run_to_consensus(const ActionProfile& profile0,
                                     const InfluenceSystem& sys, double tol = 1e-10,
                                     long max_t = 1000000) {
  ActionProfile p = profile0;
  while (action_spread(p.actions) >= tol) {
    if (p.t - profile0.t >= max_t) return {p, false};
    p = step_affine(p, sys);
  }
  return {p, true};
}

// consensus value s^T a_0 from the stationary distribution of T
inline Eigen::RowVectorXd consensus_prediction(const InfluenceSystem& sys,
                                               const ActionProfile& profile0) {
  Eigen::VectorXd s = stationary_distribution(sys.T);
  return s.transpose() * profile0.actions;
}

// per-agent efficient estimator from everyone's pooled statistics
inline Eigen::MatrixXd global_mvue(const std::vector<SignalModel>& models,
                                   const std::vector<ConjugatePrior>& priors,
                                   const std::vector<SampleBatch>& batches) {
  const int n = static_cast<int>(models.size());
  if (static_cast<int>(priors.size()) != n || static_cast<int>(batches.size()) != n)
    throw std::invalid_argument("models/priors/batches must have one entry per agent");
  double pooled_stat = 0.0, pooled_mass = 0.0;
  for (int j = 0; j < n; ++j) {
    pooled_stat += models[j].sigma() * batches[j].stat_sum;
    pooled_mass += models[j].n_samples() * models[j].delta();
  }
  Eigen::MatrixXd out(n, 1);
  for (int i = 0; i < n; ++i)
    out(i, 0) = models[i].delta() * (priors[i].alpha() + pooled_stat) /
                (models[i].sigma() * (priors[i].beta() + pooled_mass));
  return out;
}

struct EfficiencyVerdict {
  enum class Reason { None, GlobalBalance, WeightSum };
  bool efficient;
  Reason reason;

  std::string reason_name() const {
    switch (reason) {
      case Reason::GlobalBalance: return "global-balance";
      case Reason::WeightSum: return "weight-sum";
      default: return "none";
    }
  }
};

// consensus is efficient iff likelihoods are globally balanced and the
// weighted out-neighborhood sums match the in-neighborhood sums everywhere
inline EfficiencyVerdict efficiency_check(const DiGraph& graph,
                                          const std::vector<SignalModel>& models,
                                          double rel_tol = 1e-12) {
  if (!graph.is_strongly_connected())
    throw std::invalid_argument("efficiency_check requires a strongly connected graph");
  if (!check_global_balance(models, rel_tol))
    return {false, EfficiencyVerdict::Reason::GlobalBalance};
  auto weight = [&](int p) { return models[p].n_samples() * models[p].delta(); };
  double ref = 0.0;
  for (int p : graph.in_neighborhood(0)) ref += weight(p);
  for (int i = 0; i < graph.size(); ++i) {
    double in_sum = 0.0, out_sum = 0.0;
    for (int p : graph.in_neighborhood(i)) in_sum += weight(p);
    for (int p : graph.out_neighborhood(i)) out_sum += weight(p);
    if (std::abs(in_sum - ref) > rel_tol * std::max(in_sum, ref) ||
        std::abs(out_sum - ref) > rel_tol * std::max(out_sum, ref))
      return {false, EfficiencyVerdict::Reason::WeightSum};
  }
  return {true, EfficiencyVerdict::Reason::None};
}

}  // namespace grouplearn
