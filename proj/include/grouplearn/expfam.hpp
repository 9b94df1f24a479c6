#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grouplearn/rng.hpp"

namespace grouplearn {

enum class Family { GaussianKnownPrecision, PoissonExposure };

// One agent's signal likelihood: family plus the scaling pair (sigma, delta)
// and the number of i.i.d. samples it draws. The sufficient statistic is the
// identity for both built-in families, so batches carry plain sums.
class SignalModel {
 public:
  SignalModel(Family family, double sigma, double delta, int n_samples,
              bool drop_poisson_factorial = false)
      : family_(family),
        sigma_(sigma),
        delta_(delta),
        n_samples_(n_samples),
        drop_poisson_factorial_(drop_poisson_factorial) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (family == Family::GaussianKnownPrecision && sigma != delta)
      throw std::invalid_argument("Gaussian model requires sigma == delta");
    if (family == Family::PoissonExposure && sigma != 1.0)
      throw std::invalid_argument("Poisson model requires sigma == 1");
  }

  static SignalModel gaussian(double precision, int n_samples) {
    return SignalModel(Family::GaussianKnownPrecision, precision, precision, n_samples);
  }
  static SignalModel poisson(double exposure, int n_samples,
                             bool drop_factorial = false) {
    return SignalModel(Family::PoissonExposure, 1.0, exposure, n_samples, drop_factorial);
  }

  Family family() const { return family_; }
  double sigma() const { return sigma_; }
  double delta() const { return delta_; }
  int n_samples() const { return n_samples_; }
  int dim() const { return 1; }

  // expected sufficient statistic given the state
  double statistic_mean(double theta) const {
    return family_ == Family::GaussianKnownPrecision ? theta : delta_ * theta;
  }

  bool theta_in_domain(double theta) const {
    return family_ == Family::GaussianKnownPrecision || theta > 0.0;
  }

  // log-density of one sample; the Gaussian keeps its full normalization,
  // the Poisson keeps log(s!) unless construction requested dropping it
  double sample_log_density(double s, double theta) const {
    if (family_ == Family::GaussianKnownPrecision) {
      const double d = s - theta;
      return 0.5 * std::log(sigma_ / (2.0 * M_PI)) - 0.5 * sigma_ * d * d;
    }
    if (!(theta > 0.0)) throw std::domain_error("Poisson state must be positive");
    double lp = s * std::log(delta_ * theta) - delta_ * theta;
    if (!drop_poisson_factorial_) lp -= std::lgamma(s + 1.0);
    return lp;
  }

 private:
  Family family_;
  double sigma_, delta_;
  int n_samples_;
  bool drop_poisson_factorial_;
};

// (alpha, beta) conjugate pair, or the explicit non-informative limit
// (alpha, beta) -> 0, which may be improper.
class ConjugatePrior {
 public:
  static ConjugatePrior non_informative() { return ConjugatePrior(); }

  static ConjugatePrior informative(double alpha, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("informative prior requires beta > 0");
    ConjugatePrior p;
    p.informative_ = true;
    p.alpha_ = alpha;
    p.beta_ = beta;
    return p;
  }

  bool is_informative() const { return informative_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  // Gamma shape must be positive when the prior is proper
  void validate_for(const SignalModel& model) const {
    if (informative_ && model.family() == Family::PoissonExposure && !(alpha_ > 0.0))
      throw std::invalid_argument("Poisson-Gamma prior requires alpha > 0");
  }

 private:
  ConjugatePrior() = default;
  bool informative_ = false;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

struct PosteriorParams {
  double alpha;
  double beta;
};

struct SampleBatch {
  std::vector<double> values;
  double stat_sum;  // sum of per-sample sufficient statistics (identity map)

  static SampleBatch from_values(std::vector<double> v) {
    SampleBatch b;
    b.stat_sum = 0.0;
    for (double x : v) b.stat_sum += x;
    b.values = std::move(v);
    return b;
  }
};

inline SampleBatch sample_signals(const SignalModel& model, double theta, AgentRng& rng) {
  if (!model.theta_in_domain(theta))
    throw std::domain_error("theta outside the family domain");
  std::vector<double> values(model.n_samples());
  for (auto& v : values) {
    if (model.family() == Family::GaussianKnownPrecision)
      v = theta + rng.next_gaussian() / std::sqrt(model.sigma());
    else
      v = static_cast<double>(rng.next_poisson(model.delta() * theta));
  }
  return SampleBatch::from_values(std::move(values));
}

inline PosteriorParams posterior_update(const ConjugatePrior& prior,
                                        const SignalModel& model,
                                        const SampleBatch& batch) {
  prior.validate_for(model);
  if (static_cast<int>(batch.values.size()) != model.n_samples())
    throw std::invalid_argument("batch size does not match model.n_samples");
  return {prior.alpha() + model.sigma() * batch.stat_sum,
          prior.beta() + model.n_samples() * model.delta()};
}

inline double bayes_estimate(const PosteriorParams& params, const SignalModel& model) {
  if (!(params.beta > 0.0))
    throw std::domain_error("degenerate prior: estimate undefined before any data");
  return params.alpha * model.delta() / (model.sigma() * params.beta);
}

inline double time_zero_action(const SignalModel& model, const ConjugatePrior& prior,
                               const SampleBatch& batch) {
  prior.validate_for(model);
  if (static_cast<int>(batch.values.size()) != model.n_samples())
    throw std::invalid_argument("batch size does not match model.n_samples");
  return (batch.stat_sum + prior.alpha() / model.sigma()) /
         (model.n_samples() + prior.beta() / model.delta());
}

// inverse of time_zero_action: recovers a neighbor's statistic sum
inline double infer_neighbor_stat(double action, const SignalModel& model,
                                  const ConjugatePrior& prior) {
  return (model.n_samples() + prior.beta() / model.delta()) * action -
         prior.alpha() / model.sigma();
}

inline double log_likelihood(const SignalModel& model, const SampleBatch& batch,
                             double theta) {
  if (!model.theta_in_domain(theta))
    throw std::domain_error("theta outside the family domain");
  double total = 0.0;
  for (double s : batch.values) total += model.sample_log_density(s, theta);
  return total;
}

}  // namespace grouplearn
