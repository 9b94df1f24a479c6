#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "grouplearn/belief_dynamics.hpp"
#include "grouplearn/rng.hpp"
#include "test_helpers.hpp"

using namespace grouplearn;
using testutil::max_prob_diff;

namespace {

Eigen::VectorXd probs2(double p) {
  Eigen::VectorXd v(2);
  v << p, 1.0 - p;
  return v;
}

// brute-force posterior oracle working in probability space on the raw
// per-sample densities
Belief brute_force_posterior(const std::vector<SignalModel>& models,
                             const std::vector<SampleBatch>& batches,
                             const StateSpace& space) {
  Eigen::VectorXd mass = Eigen::VectorXd::Ones(space.size());
  for (int s = 0; s < space.size(); ++s)
    for (std::size_t j = 0; j < models.size(); ++j)
      for (double v : batches[j].values)
        mass(s) *= std::exp(models[j].sample_log_density(v, space[s]));
  return Belief::from_probabilities(mass / mass.sum());
}

}  // namespace

TEST_CASE("state space invariants") {
  REQUIRE_THROWS_AS(StateSpace({1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(StateSpace({1.0, 1.0}), std::invalid_argument);
  REQUIRE(StateSpace({0.5, 1.5, 2.5}).size() == 3);
}

TEST_CASE("belief algebra examples") {
  Belief u = Belief::uniform(2);
  Belief a = Belief::from_probabilities(probs2(0.8));
  SECTION("uniform is the identity") {
    REQUIRE(max_prob_diff(oplus(u, a), a) < 1e-15);
    REQUIRE(max_prob_diff(oplus(Belief::from_probabilities(probs2(0.5)), a), a) < 1e-15);
  }
  SECTION("inverse flips the odds") {
    REQUIRE(max_prob_diff(inverse(a), Belief::from_probabilities(probs2(0.2))) < 1e-15);
    REQUIRE(max_prob_diff(ominus(a, a), u) < 1e-15);
  }
  SECTION("scaling") {
    REQUIRE(max_prob_diff(scale(1.0, a), a) < 1e-15);
    REQUIRE(max_prob_diff(scale(0.0, a), u) < 1e-15);
    REQUIRE(max_prob_diff(scale(2.0, a),
                          Belief::from_probabilities(probs2(16.0 / 17.0))) < 1e-15);
  }
}

TEST_CASE("belief algebra laws on random interior beliefs") {
  AgentRng rng(307, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng.next_u64() % 4);
    Belief a = testutil::random_interior_belief(m, rng);
    Belief b = testutil::random_interior_belief(m, rng);
    Belief c = testutil::random_interior_belief(m, rng);
    const double r = 3.0 * rng.next_double() - 1.0;
    const double s = 3.0 * rng.next_double() - 1.0;
    REQUIRE(max_prob_diff(oplus(a, b), oplus(b, a)) < 1e-13);
    REQUIRE(max_prob_diff(oplus(oplus(a, b), c), oplus(a, oplus(b, c))) < 1e-13);
    REQUIRE(max_prob_diff(oplus(a, inverse(a)), Belief::uniform(m)) < 1e-13);
    REQUIRE(max_prob_diff(scale(r + s, a), oplus(scale(r, a), scale(s, a))) < 1e-13);
    REQUIRE(max_prob_diff(scale(r, oplus(a, b)), oplus(scale(r, a), scale(r, b))) < 1e-13);
    REQUIRE(max_prob_diff(scale(r * s, a), scale(r, scale(s, a))) < 1e-13);
  }
}

TEST_CASE("time_zero_belief") {
  SECTION("unit-precision Gaussian observation of 1 on {0, 1}") {
    auto model = SignalModel::gaussian(1.0, 1);
    auto batch = SampleBatch::from_values({1.0});
    StateSpace space({0.0, 1.0});
    Belief b = time_zero_belief(model, batch, Belief::uniform(2), space);
    const Eigen::VectorXd p = b.probabilities();
    REQUIRE_THAT(p(1) / p(0), Catch::Matchers::WithinAbs(std::exp(0.5), 1e-12));
  }
  SECTION("matches the brute-force Bayes oracle") {
    AgentRng rng(311, 0);
    StateSpace space({0.5, 1.5});
    for (int trial = 0; trial < 100; ++trial) {
      auto agents = testutil::random_agents(1, (trial % 2) == 0, false, 1.0, rng);
      Belief b = time_zero_belief(agents.models[0], agents.batches[0], Belief::uniform(2),
                                  space);
      Belief oracle = brute_force_posterior(agents.models, agents.batches, space);
      REQUIRE(max_prob_diff(b, oracle) < 1e-12);
    }
  }
  SECTION("dimension mismatch is rejected") {
    auto model = SignalModel::gaussian(1.0, 1);
    auto batch = SampleBatch::from_values({0.0});
    REQUIRE_THROWS_AS(
        time_zero_belief(model, batch, Belief::uniform(3), StateSpace({0.0, 1.0})),
        std::invalid_argument);
  }
}

TEST_CASE("update_step") {
  SECTION("a lone agent never changes its mind") {
    BeliefProfile p{{Belief::from_probabilities(probs2(0.7))}, 0};
    auto next = update_step(p, DiGraph(1, {}), {Belief::uniform(2)});
    REQUIRE(next.t == 1);
    REQUIRE(max_prob_diff(next.beliefs[0], p.beliefs[0]) < 1e-15);
  }
  SECTION("two agents on the complete graph pool multiplicatively") {
    BeliefProfile p{{Belief::from_probabilities(probs2(0.5)),
                     Belief::from_probabilities(probs2(0.8))},
                    0};
    auto next = update_step(p, DiGraph::complete(2),
                            {Belief::uniform(2), Belief::uniform(2)});
    for (int i = 0; i < 2; ++i)
      REQUIRE(max_prob_diff(next.beliefs[i], Belief::from_probabilities(probs2(0.8))) <
              1e-14);
  }
  SECTION("proper priors reduce to the uniform-prior update on corrected beliefs") {
    AgentRng rng(313, 0);
    const int n = 4, m = 3;
    auto g = testutil::random_strongly_connected(n, rng);
    std::vector<Belief> priors, uniform_priors;
    BeliefProfile p{{}, 0};
    for (int i = 0; i < n; ++i) {
      priors.push_back(testutil::random_interior_belief(m, rng));
      uniform_priors.push_back(Belief::uniform(m));
      p.beliefs.push_back(testutil::random_interior_belief(m, rng));
    }
    BeliefProfile corrected{{}, 0};
    for (int i = 0; i < n; ++i) corrected.beliefs.push_back(ominus(p.beliefs[i], priors[i]));
    auto next = update_step(p, g, priors);
    auto next_corrected = update_step(corrected, g, uniform_priors);
    for (int i = 0; i < n; ++i)
      REQUIRE(max_prob_diff(ominus(next.beliefs[i], priors[i]), next_corrected.beliefs[i]) <
              1e-12);
  }
}

TEST_CASE("vectorized_update agrees with iterating the one-step rule") {
  AgentRng rng(317, 0);
  DiGraph g = DiGraph::cycle(3);
  BeliefProfile p{{}, 0};
  std::vector<Belief> priors;
  for (int i = 0; i < 3; ++i) {
    p.beliefs.push_back(testutil::random_interior_belief(3, rng));
    priors.push_back(testutil::random_interior_belief(3, rng));
  }
  SECTION("t = 0 is the identity") {
    auto out = vectorized_update(p, g, priors, 0);
    for (int i = 0; i < 3; ++i) REQUIRE(max_prob_diff(out.beliefs[i], p.beliefs[i]) < 1e-15);
  }
  SECTION("t = 1 matches a single step") {
    auto out = vectorized_update(p, g, priors, 1);
    auto stepped = update_step(p, g, priors);
    for (int i = 0; i < 3; ++i)
      REQUIRE(max_prob_diff(out.beliefs[i], stepped.beliefs[i]) < 1e-13);
  }
  SECTION("t = 10 matches ten steps") {
    auto out = vectorized_update(p, g, priors, 10);
    BeliefProfile iter = p;
    for (int t = 0; t < 10; ++t) iter = update_step(iter, g, priors);
    REQUIRE(out.t == 10);
    for (int i = 0; i < 3; ++i) REQUIRE(max_prob_diff(out.beliefs[i], iter.beliefs[i]) < 1e-9);
  }
  SECTION("negative time is rejected") {
    REQUIRE_THROWS_AS(vectorized_update(p, g, priors, -1), std::domain_error);
  }
}

TEST_CASE("bayesian_aggregate") {
  SECTION("single agent equals the uniform-prior time-zero belief") {
    AgentRng rng(331, 0);
    StateSpace space({0.5, 1.0, 2.0});
    auto agents = testutil::random_agents(1, false, false, 1.0, rng);
    Belief agg = bayesian_aggregate(agents.models, agents.batches, space);
    Belief tz = time_zero_belief(agents.models[0], agents.batches[0], Belief::uniform(3),
                                 space);
    REQUIRE(max_prob_diff(agg, tz) < 1e-13);
  }
  SECTION("symmetric opposing evidence cancels to uniform") {
    std::vector<SignalModel> models(2, SignalModel::gaussian(1.0, 1));
    std::vector<SampleBatch> batches = {SampleBatch::from_values({1.0}),
                                        SampleBatch::from_values({-1.0})};
    Belief agg = bayesian_aggregate(models, batches, StateSpace({-1.0, 1.0}));
    REQUIRE(max_prob_diff(agg, Belief::uniform(2)) < 1e-13);
  }
  SECTION("matches the brute-force oracle for four agents on three states") {
    AgentRng rng(337, 0);
    StateSpace space({0.5, 1.0, 1.5});
    for (int trial = 0; trial < 50; ++trial) {
      auto agents = testutil::random_agents(4, (trial % 2) == 0, false, 1.0, rng);
      Belief agg = bayesian_aggregate(agents.models, agents.batches, space);
      Belief oracle = brute_force_posterior(agents.models, agents.batches, space);
      REQUIRE(max_prob_diff(agg, oracle) < 1e-12);
    }
  }
}

TEST_CASE("argmax_set") {
  Eigen::VectorXd scores(3);
  scores << 0.0, -0.5, -1.0;
  REQUIRE(argmax_set(scores) == std::vector<int>{0});
  Eigen::VectorXd tied(3);
  tied << 1.0, 1.0 - 1e-12, 0.0;
  REQUIRE(argmax_set(tied) == std::vector<int>{0, 1});
}

TEST_CASE("weighted_mle_set matches an exhaustive scan") {
  AgentRng rng(347, 0);
  StateSpace space({0.5, 1.0, 1.5, 2.0});
  Eigen::VectorXd alpha(3);
  alpha << 0.5, 0.25, 0.25;
  for (int trial = 0; trial < 30; ++trial) {
    auto agents = testutil::random_agents(3, (trial % 2) == 0, false, 1.2, rng);
    auto got = weighted_mle_set(agents.models, agents.batches, alpha, space);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < space.size(); ++s) {
      double score = 0.0;
      for (int i = 0; i < 3; ++i)
        score += alpha(i) * log_likelihood(agents.models[i], agents.batches[i], space[s]);
      if (score > best_score) {
        best_score = score;
        best = s;
      }
    }
    REQUIRE(std::find(got.begin(), got.end(), best) != got.end());
    REQUIRE(got.size() == 1);
  }
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(3, 0.5);
  REQUIRE_THROWS_AS(
      weighted_mle_set({SignalModel::gaussian(1.0, 1), SignalModel::gaussian(1.0, 1),
                        SignalModel::gaussian(1.0, 1)},
                       {SampleBatch::from_values({0.0}), SampleBatch::from_values({0.0}),
                        SampleBatch::from_values({0.0})},
                       bad, StateSpace({0.0, 1.0})),
      std::invalid_argument);
}

TEST_CASE("asymptotic_prediction") {
  auto one = asymptotic_prediction({1}, 3);
  REQUIRE(one.mass(0) == 0.0);
  REQUIRE(one.mass(1) == 1.0);
  auto two = asymptotic_prediction({0, 2}, 3);
  REQUIRE(two.mass(0) == 0.5);
  REQUIRE(two.mass(1) == 0.0);
  REQUIRE(two.mass(2) == 0.5);
  REQUIRE_THROWS_AS(asymptotic_prediction({}, 3), std::invalid_argument);
}

TEST_CASE("log_ratio_trajectory") {
  SECTION("uniform history gives all zeros") {
    std::vector<BeliefProfile> hist(3, BeliefProfile{{Belief::uniform(2),
                                                      Belief::uniform(2)},
                                                     0});
    REQUIRE(log_ratio_trajectory(hist, 1, 0).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("one step on the complete graph sums the individual log ratios") {
    AgentRng rng(349, 0);
    const int n = 3;
    DiGraph g = DiGraph::complete(n);
    StateSpace space({0.5, 1.5});
    auto agents = testutil::random_agents(n, true, false, 1.0, rng);
    std::vector<Belief> priors(n, Belief::uniform(2));
    BeliefProfile p0{{}, 0};
    double lambda_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      p0.beliefs.push_back(
          time_zero_belief(agents.models[i], agents.batches[i], priors[i], space));
      lambda_sum += log_likelihood(agents.models[i], agents.batches[i], space[1]) -
                    log_likelihood(agents.models[i], agents.batches[i], space[0]);
    }
    auto p1 = update_step(p0, g, priors);
    auto phi = log_ratio_trajectory({p0, p1}, 1, 0);
    for (int i = 0; i < n; ++i)
      REQUIRE_THAT(phi(i, 1), Catch::Matchers::WithinAbs(lambda_sum, 1e-10));
  }
}

TEST_CASE("log ratios grow at the Perron rate on a balanced regular graph") {
  AgentRng rng(353, 0);
  const int n = 3;
  DiGraph g = DiGraph::cycle(n);
  StateSpace space({0.5, 1.5});
  // true state off-center so the mean log-likelihood ratio stays away from 0
  auto agents = testutil::random_agents(n, true, false, 1.4, rng);
  std::vector<Belief> priors(n, Belief::uniform(2));
  std::vector<BeliefProfile> hist;
  hist.push_back({{}, 0});
  double lambda_mean = 0.0;
  for (int i = 0; i < n; ++i) {
    hist[0].beliefs.push_back(
        time_zero_belief(agents.models[i], agents.batches[i], priors[i], space));
    lambda_mean += (log_likelihood(agents.models[i], agents.batches[i], space[1]) -
                    log_likelihood(agents.models[i], agents.batches[i], space[0])) /
                   n;
  }
  const int T = 50;
  for (int t = 0; t < T; ++t) hist.push_back(update_step(hist.back(), g, priors));
  auto phi = log_ratio_trajectory(hist, 1, 0);
  const double rho = perron_pair(g.adjacency()).rho;  // 2 on the cycle
  // the scaled trajectory converges to r * Lambda with r = 1 on balanced
  // regular graphs, so the relative error dies out
  for (int i = 0; i < n; ++i) {
    const double scaled = phi(i, T) / std::pow(rho, T);
    REQUIRE(std::abs(scaled - lambda_mean) < 0.05 * std::abs(lambda_mean));
  }
}

TEST_CASE("limiting support does not depend on the interior priors") {
  AgentRng rng(359, 0);
  const int n = 3, m = 3;
  DiGraph g = DiGraph::cycle(n);
  StateSpace space({0.5, 1.0, 1.5});
  auto agents = testutil::random_agents(n, true, false, 1.0, rng);
  Centrality cent = centrality(g);
  auto diamond = weighted_mle_set(agents.models, agents.batches, cent.alpha, space);

  for (int variant = 0; variant < 3; ++variant) {
    std::vector<Belief> priors;
    BeliefProfile p{{}, 0};
    for (int i = 0; i < n; ++i) {
      priors.push_back(variant == 0 ? Belief::uniform(m)
                                    : testutil::random_interior_belief(m, rng));
      p.beliefs.push_back(
          time_zero_belief(agents.models[i], agents.batches[i], priors[i], space));
    }
    double mass = 0.0;
    for (int t = 0; t < 500 && mass < 1.0 - 1e-6; ++t) {
      p = update_step(p, g, priors);
      mass = 0.0;
      const Eigen::VectorXd probs = p.beliefs[0].probabilities();
      for (int s : diamond) mass += probs(s);
    }
    REQUIRE(mass > 1.0 - 1e-6);
  }
}

TEST_CASE("beliefs concentrate on the centrality-weighted MLE set") {
  AgentRng rng(367, 0);
  const int n = 4, m = 3;
  DiGraph g = DiGraph::star(n);  // non-regular, strongly connected
  StateSpace space({0.5, 1.0, 1.5});
  auto agents = testutil::random_agents(n, true, false, 1.0, rng);
  Centrality cent = centrality(g);
  auto diamond = weighted_mle_set(agents.models, agents.batches, cent.alpha, space);
  std::vector<Belief> priors(n, Belief::uniform(m));
  BeliefProfile p{{}, 0};
  for (int i = 0; i < n; ++i)
    p.beliefs.push_back(
        time_zero_belief(agents.models[i], agents.batches[i], priors[i], space));
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    p = update_step(p, g, priors);
    worst = 1.0;
    for (int i = 0; i < n; ++i) {
      double mass = 0.0;
      const Eigen::VectorXd probs = p.beliefs[i].probabilities();
      for (int s : diamond) mass += probs(s);
      worst = std::min(worst, mass);
    }
    if (worst > 1.0 - 1e-6) break;
  }
  REQUIRE(worst > 1.0 - 1e-6);
}

TEST_CASE("the limit belief is at least the misplaced Bayes mass away") {
  AgentRng rng(373, 0);
  StateSpace space({0.5, 1.0, 1.5});
  DiGraph g = DiGraph::star(4);
  Centrality cent = centrality(g);
  for (int trial = 0; trial < 20; ++trial) {
    auto agents = testutil::random_agents(4, false, false, 1.0, rng);
    auto diamond = weighted_mle_set(agents.models, agents.batches, cent.alpha, space);
    auto limit = asymptotic_prediction(diamond, space.size());
    Belief agg = bayesian_aggregate(agents.models, agents.batches, space);
    double misplaced = 1.0;
    const Eigen::VectorXd p = agg.probabilities();
    for (int s : diamond) misplaced -= p(s);
    REQUIRE(total_variation(limit.mass, p) >= misplaced - 1e-9);
  }
}

TEST_CASE("boundary beliefs are rejected") {
  Eigen::VectorXd with_zero(2);
  with_zero << 1.0, 0.0;
  REQUIRE_THROWS_AS(Belief::from_probabilities(with_zero), std::domain_error);
  Eigen::VectorXd all_ninf =
      Eigen::VectorXd::Constant(2, -std::numeric_limits<double>::infinity());
  REQUIRE_THROWS_AS(Belief::from_log_unnormalized(all_ninf), std::domain_error);
}
