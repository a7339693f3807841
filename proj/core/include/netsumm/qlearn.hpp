#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netsumm/feedback.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/rng.hpp"

namespace netsumm {

struct Hyperparameters {
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_end = 0.5;
  double epsilon_decay_fraction = 1.0;  // share of episodes over which epsilon decays
  std::size_t hidden = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t episodes = 300;
  std::size_t step_cap_factor = 4;  // per-episode step cap is factor * n
  // Probability that an episode starts from the incumbent (the best
  // feedback-satisfying assignment of the current restart segment) instead
  // of uniform random labels.
  double incumbent_start_probability = 0.8;
  // Episodes without incumbent improvement before the segment is dropped
  // and the search restarts from random labels. 0 disables restarts.
  std::size_t restart_patience = 40;

  void validate() const;
  double epsilon_at(std::size_t episode) const;
  std::size_t step_cap(std::size_t n) const { return step_cap_factor * n; }

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static Hyperparameters from_json(const nlohmann::json& j);
};

/// Two-layer fully connected Q network. Input is the one-hot assignment
/// (n*k), hidden layer is ReLU of width h, output is one value per
/// (node, label) action. Weight matrices are row-major (out x in).
class QModel {
 public:
  QModel() = default;
  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  QModel(std::size_t n, int k, const Hyperparameters& hp, std::uint64_t seed);
  static QModel zeros(std::size_t n, int k, std::size_t hidden);

  std::size_t nodes() const { return n_; }
  int groups() const { return k_; }
  std::size_t hidden() const { return h_; }
  std::size_t dim() const { return n_ * static_cast<std::size_t>(k_); }
  const Hyperparameters& hyperparameters() const { return hp_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<double> w1, b1, w2, b2;

  bool finite() const;

  nlohmann::json to_json() const;
  /// Validates dimensions and finiteness.
  static QModel from_json(const nlohmann::json& j);

 private:
  std::size_t n_ = 0;
  int k_ = 0;
  std::size_t h_ = 0;
  Hyperparameters hp_;
  std::uint64_t seed_ = 0;
};

struct Action {
  std::size_t node = 0;
  int label = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct Transition {
  Assignment state;
  Action action;
  double reward = 0.0;
  Assignment next;
  bool terminal = false;
};

std::vector<double> encode_state(const Assignment& assignment);

std::vector<double> q_forward(const QModel& model, std::span<const double> state);

/// Epsilon-greedy over actions that change a label. Greedy ties go to the
/// lowest (node, label).
Action select_action(const QModel& model, const Assignment& assignment, double epsilon, Rng& rng);

Assignment transition(const Assignment& assignment, const Action& action);

/// F_prob of `next` when it satisfies all feedback, else -1.
double reward(const DocumentGraph& graph, const PairConstraints& feedback, const Assignment& next);

struct Gradients {
  std::vector<double> w1, b1, w2, b2;
};

/// r for terminal transitions, else r + gamma * max over valid actions of Q(s').
std::vector<double> td_targets(const QModel& model, std::span<const Transition> batch);

/// Mean squared error of Q(s, a) against fixed targets.
double batch_loss(const QModel& model, std::span<const Transition> batch, std::span<const double> targets);

Gradients loss_gradient(const QModel& model, std::span<const Transition> batch, std::span<const double> targets);

/// Momentum buffers for one training run.
class MomentumSgd {
 public:
  explicit MomentumSgd(const QModel& model);
  void step(QModel& model, const Gradients& grad);

 private:
  Gradients velocity_;
};

/// One semi-gradient Bellman step on the batch. Returns the mean loss
/// before the step.
double td_update(QModel& model, MomentumSgd& optimizer, std::span<const Transition> batch);

struct EpisodeLog {
  std::size_t episode = 0;
  std::size_t steps = 0;
  bool terminal = false;
  double reward = 0.0;  // reward of the last transition
  double f_prob = 0.0;  // of the final state
  double loss = 0.0;
  double epsilon = 0.0;
};

struct TrainOptions {
  std::function<void(const EpisodeLog&)> on_episode;
  std::function<bool()> should_stop;
  // Keep every transition in the result (tests and diagnostics).
  bool keep_traces = false;
};

struct TrainResult {
  QModel model;
  Assignment best;
  double best_f_prob = 0.0;
  bool best_terminal = false;  // false: no satisfying assignment was found
  std::size_t best_satisfied = 0;
  std::vector<EpisodeLog> log;
  std::vector<std::vector<Transition>> traces;
  bool cancelled = false;
};

/// Q-learning over label assignments. Throws InfeasibleError when the
/// feedback provably cannot be satisfied with k groups.
TrainResult train(const DocumentGraph& graph, const PairConstraints& feedback, int k,
                  const Hyperparameters& hp, std::uint64_t seed, const TrainOptions& options = {});

struct ReapplyResult {
  Assignment assignment;
  std::size_t steps = 0;
  bool terminal = false;
  Satisfaction satisfaction;
};

/// Greedy rollout of a trained model without weight updates.
ReapplyResult reapply(const QModel& model, const DocumentGraph& graph, const PairConstraints& feedback, int k,
                      std::uint64_t seed);

Assignment random_assignment(std::size_t n, int k, Rng& rng);

}  // namespace netsumm
