#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "grouplearn/expfam.hpp"
#include "grouplearn/network.hpp"
#include "grouplearn/spectral.hpp"

namespace grouplearn {

// finite state grid; states are the numeric values the likelihoods are
// evaluated at and double as labels
class StateSpace {
 public:
  explicit StateSpace(std::vector<double> states) : states_(std::move(states)) {
    if (states_.size() < 2) throw std::invalid_argument("state space needs m >= 2");
    for (std::size_t a = 0; a < states_.size(); ++a)
      for (std::size_t b = a + 1; b < states_.size(); ++b)
        if (states_[a] == states_[b])
          throw std::invalid_argument("state labels must be unique");
  }

  int size() const { return static_cast<int>(states_.size()); }
  double operator[](int i) const { return states_.at(i); }
  const std::vector<double>& values() const { return states_; }

 private:
  std::vector<double> states_;
};

inline double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// pmf over the finite state space, held in log-space and normalized so that
// logsumexp(log_mass) == 0; algebra inputs must lie in the simplex interior
class Belief {
 public:
  static Belief uniform(int m) {
    return Belief(Eigen::VectorXd::Constant(m, -std::log(double(m))));
  }

  static Belief from_log_unnormalized(const Eigen::VectorXd& log_mass) {
    const double z = logsumexp(log_mass);
    if (!std::isfinite(z)) throw std::domain_error("degenerate evidence: no finite mass");
    return Belief(log_mass.array() - z);
  }

  static Belief from_probabilities(const Eigen::VectorXd& p) {
    if ((p.array() <= 0.0).any())
      throw std::domain_error("belief must lie in the simplex interior");
    return from_log_unnormalized(p.array().log());
  }

  const Eigen::VectorXd& log_mass() const { return log_mass_; }
  Eigen::VectorXd probabilities() const { return log_mass_.array().exp(); }
  int size() const { return static_cast<int>(log_mass_.size()); }

  bool interior() const { return log_mass_.allFinite(); }

  void require_interior() const {
    if (!interior()) throw std::domain_error("belief algebra requires interior beliefs");
  }

 private:
  explicit Belief(Eigen::VectorXd lm) : log_mass_(std::move(lm)) {}
  Eigen::VectorXd log_mass_;
};

inline Belief oplus(const Belief& a, const Belief& b) {
  a.require_interior();
  b.require_interior();
  return Belief::from_log_unnormalized(a.log_mass() + b.log_mass());
}

inline Belief inverse(const Belief& a) {
  a.require_interior();
  return Belief::from_log_unnormalized(-a.log_mass());
}

inline Belief ominus(const Belief& a, const Belief& b) {
  a.require_interior();
  b.require_interior();
  return Belief::from_log_unnormalized(a.log_mass() - b.log_mass());
}

// r-th power in the belief group, extended to real exponents
inline Belief scale(double r, const Belief& a) {
  a.require_interior();
  return Belief::from_log_unnormalized(r * a.log_mass());
}

struct BeliefProfile {
  std::vector<Belief> beliefs;
  long t = 0;
};

inline Belief time_zero_belief(const SignalModel& model, const SampleBatch& batch,
                               const Belief& prior, const StateSpace& space) {
  prior.require_interior();
  if (prior.size() != space.size())
    throw std::invalid_argument("prior dimension does not match state space");
  Eigen::VectorXd lm = prior.log_mass();
  for (int s = 0; s < space.size(); ++s) lm(s) += log_likelihood(model, batch, space[s]);
  return Belief::from_log_unnormalized(lm);
}

// one round of the multiplicative heuristic: combine the neighborhood's
// beliefs and divide out the neighbors' priors
inline BeliefProfile update_step(const BeliefProfile& profile, const DiGraph& graph,
                                 const std::vector<Belief>& priors) {
  const int n = graph.size();
  if (static_cast<int>(profile.beliefs.size()) != n ||
      static_cast<int>(priors.size()) != n)
    throw std::invalid_argument("profile/prior count must match the graph");
  BeliefProfile next;
  next.t = profile.t + 1;
  next.beliefs.reserve(n);
  for (int i = 0; i < n; ++i) {
    profile.beliefs[i].require_interior();
    Eigen::VectorXd lm = profile.beliefs[i].log_mass();
    for (int j : graph.in_neighborhood(i)) {
      if (j == i) continue;
      priors[j].require_interior();
      lm += profile.beliefs[j].log_mass() - priors[j].log_mass();
    }
    next.beliefs.push_back(Belief::from_log_unnormalized(lm));
  }
  return next;
}

// t-step beliefs straight from integer matrix powers of the neighborhood
// matrix M: log mu_t = M^t log mu_0 - (sum_{tau<t} M^tau (M - I)) log nu,
// row-renormalized. Agrees with t applications of update_step.
inline BeliefProfile vectorized_update(const BeliefProfile& profile0, const DiGraph& graph,
                                       const std::vector<Belief>& priors, long t) {
  if (t < 0) throw std::domain_error("negative time");
  const int n = graph.size();
  const int m = profile0.beliefs.at(0).size();
  const Eigen::MatrixXd& M = graph.adjacency();
  const Eigen::MatrixXd A0 = M - Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd L0(n, m), G(n, m);
  for (int i = 0; i < n; ++i) {
    profile0.beliefs[i].require_interior();
    priors.at(i).require_interior();
    L0.row(i) = profile0.beliefs[i].log_mass().transpose();
    G.row(i) = priors[i].log_mass().transpose();
  }

  Eigen::MatrixXd Mpow = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd prior_weight = Eigen::MatrixXd::Zero(n, n);
  for (long tau = 0; tau < t; ++tau) {
    prior_weight += Mpow;
    Mpow = Mpow * M;
  }
  const Eigen::MatrixXd Lt = Mpow * L0 - prior_weight * A0 * G;

  BeliefProfile out;
  out.t = profile0.t + t;
  out.beliefs.reserve(n);
  for (int i = 0; i < n; ++i)
    out.beliefs.push_back(Belief::from_log_unnormalized(Lt.row(i).transpose()));
  return out;
}

// uniform-prior Bayes posterior given every agent's raw signals
inline Belief bayesian_aggregate(const std::vector<SignalModel>& models,
                                 const std::vector<SampleBatch>& batches,
                                 const StateSpace& space) {
  if (models.size() != batches.size())
    throw std::invalid_argument("models/batches must have one entry per agent");
  Eigen::VectorXd lm = Eigen::VectorXd::Zero(space.size());
  for (std::size_t j = 0; j < models.size(); ++j)
    for (int s = 0; s < space.size(); ++s)
      lm(s) += log_likelihood(models[j], batches[j], space[s]);
  return Belief::from_log_unnormalized(lm);
}

inline Eigen::VectorXd weighted_log_likelihoods(const std::vector<SignalModel>& models,
                                                const std::vector<SampleBatch>& batches,
                                                const Eigen::VectorXd& alpha,
                                                const StateSpace& space) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(space.size());
  for (std::size_t i = 0; i < models.size(); ++i)
    for (int s = 0; s < space.size(); ++s)
      w(s) += alpha(i) * log_likelihood(models[i], batches[i], space[s]);
  return w;
}

// indices within a relative tie tolerance of the maximum score
inline std::vector<int> argmax_set(const Eigen::VectorXd& scores, double tie_tol = 1e-9) {
  const double top = scores.maxCoeff();
  const double slack = tie_tol * std::max(1.0, std::abs(top));
  std::vector<int> argmax;
  for (int s = 0; s < scores.size(); ++s)
    if (top - scores(s) <= slack) argmax.push_back(s);
  return argmax;
}

// argmax set of the centrality-weighted log-likelihood sum; with uniform
// weights this is the global MLE set
inline std::vector<int> weighted_mle_set(const std::vector<SignalModel>& models,
                                         const std::vector<SampleBatch>& batches,
                                         const Eigen::VectorXd& alpha,
                                         const StateSpace& space,
                                         double tie_tol = 1e-9) {
  if (std::abs(alpha.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("weights must sum to 1");
  return argmax_set(weighted_log_likelihoods(models, batches, alpha, space), tie_tol);
}

// limit belief: uniform over the argmax set, zero elsewhere; boundary point,
// deliberately not a Belief
struct LimitBelief {
  Eigen::VectorXd mass;
};

inline LimitBelief asymptotic_prediction(const std::vector<int>& theta_diamond, int m) {
  if (theta_diamond.empty()) throw std::invalid_argument("empty argmax set");
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(m);
  for (int s : theta_diamond) mass(s) = 1.0 / double(theta_diamond.size());
  return {mass};
}

// per-agent log(mu(th_hat)/mu(th_check)) over a recorded history; column t
// holds the values at history[t]
inline Eigen::MatrixXd log_ratio_trajectory(const std::vector<BeliefProfile>& history,
                                            int theta_hat, int theta_check) {
  if (history.empty()) throw std::invalid_argument("empty history");
  const int n = static_cast<int>(history[0].beliefs.size());
  Eigen::MatrixXd phi(n, history.size());
  for (std::size_t t = 0; t < history.size(); ++t)
    for (int i = 0; i < n; ++i) {
      const auto& lm = history[t].beliefs[i].log_mass();
      phi(i, static_cast<int>(t)) = lm(theta_hat) - lm(theta_check);
    }
  return phi;
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace grouplearn
