#include "netsumm/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"

namespace netsumm {
namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Activations {
  std::vector<double> pre;     // W1 x + b1
  std::vector<double> hidden;  // relu(pre)
  std::vector<double> out;
};

Activations forward(const QModel& m, std::span<const double> x) {
  const std::size_t d = m.dim();
  const std::size_t h = m.hidden();
  Activations a;
  a.pre = m.b1;
  for (std::size_t r = 0; r < h; ++r) {
    const double* row = m.w1.data() + r * d;
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      if (x[c] != 0.0) s += row[c] * x[c];
    }
    a.pre[r] += s;
  }
  a.hidden.resize(h);
  for (std::size_t r = 0; r < h; ++r) a.hidden[r] = a.pre[r] > 0.0 ? a.pre[r] : 0.0;
  a.out = m.b2;
  for (std::size_t o = 0; o < d; ++o) {
    const double* row = m.w2.data() + o * h;
    double s = 0.0;
    for (std::size_t r = 0; r < h; ++r) s += row[r] * a.hidden[r];
    a.out[o] += s;
  }
  return a;
}

void check_dims(const QModel& m, const Assignment& a) {
  if (a.size() != m.nodes() || a.k != m.groups()) {
    throw DimensionError("model expects n=" + std::to_string(m.nodes()) + ", k=" + std::to_string(m.groups()) +
                         " but assignment has n=" + std::to_string(a.size()) + ", k=" + std::to_string(a.k));
  }
}

double max_valid_q(const std::vector<double>& q, const Assignment& s) {
  const auto k = static_cast<std::size_t>(s.k);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      if (static_cast<int>(l) == s.labels[i]) continue;
      best = std::max(best, q[i * k + l]);
    }
  }
  return best;
}

template <typename F>
void for_each_param(Gradients& g, F&& f) {
  f(g.w1);
  f(g.b1);
  f(g.w2);
  f(g.b2);
}

}  // namespace

void Hyperparameters::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("gamma must be in [0, 1)");
  for (double e : {epsilon_start, epsilon_end}) {
    if (!(e >= 0.0 && e <= 1.0)) throw InputError("epsilon must be in [0, 1]");
  }
  if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0)) {
    throw InputError("epsilon_decay_fraction must be in (0, 1]");
  }
  if (hidden == 0) throw InputError("hidden width must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must be in [0, 1)");
  if (episodes == 0) throw InputError("episodes must be positive");
  if (step_cap_factor == 0) throw InputError("step_cap_factor must be positive");
  if (!(incumbent_start_probability >= 0.0 && incumbent_start_probability <= 1.0)) {
    throw InputError("incumbent_start_probability must be in [0, 1]");
  }
}

double Hyperparameters::epsilon_at(std::size_t episode) const {
  const double span = epsilon_decay_fraction * static_cast<double>(episodes);
  const double t = span <= 0.0 ? 1.0 : std::min(1.0, static_cast<double>(episode) / span);
  return epsilon_start + (epsilon_end - epsilon_start) * t;
}

nlohmann::json Hyperparameters::to_json() const {
  return {{"gamma", gamma},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end},
          {"epsilon_decay_fraction", epsilon_decay_fraction},
          {"hidden", hidden},
          {"learning_rate", learning_rate},
          {"momentum", momentum},
          {"episodes", episodes},
          {"step_cap_factor", step_cap_factor},
          {"incumbent_start_probability", incumbent_start_probability},
          {"restart_patience", restart_patience}};
}

Hyperparameters Hyperparameters::from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  try {
    hp.gamma = j.value("gamma", hp.gamma);
    hp.epsilon_start = j.value("epsilon_start", hp.epsilon_start);
    hp.epsilon_end = j.value("epsilon_end", hp.epsilon_end);
    hp.epsilon_decay_fraction = j.value("epsilon_decay_fraction", hp.epsilon_decay_fraction);
    hp.hidden = j.value("hidden", hp.hidden);
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    hp.momentum = j.value("momentum", hp.momentum);
    hp.episodes = j.value("episodes", hp.episodes);
    hp.step_cap_factor = j.value("step_cap_factor", hp.step_cap_factor);
    hp.incumbent_start_probability = j.value("incumbent_start_probability", hp.incumbent_start_probability);
    hp.restart_patience = j.value("restart_patience", hp.restart_patience);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad hyperparameters: ") + e.what());
  }
  hp.validate();
  return hp;
}

QModel::QModel(std::size_t n, int k, const Hyperparameters& hp, std::uint64_t seed)
    : n_(n), k_(k), h_(hp.hidden), hp_(hp), seed_(seed) {
  if (n == 0 || k < 1) throw InputError("model needs n >= 1 and k >= 1");
  const std::size_t d = dim();
  Rng rng(seed);
  auto fill = [&](std::vector<double>& v, std::size_t size, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    v.resize(size);
    for (auto& x : v) x = rng.uniform(-bound, bound);
  };
  fill(w1, h_ * d, d);
  fill(b1, h_, d);
  fill(w2, d * h_, h_);
  fill(b2, d, h_);
}

QModel QModel::zeros(std::size_t n, int k, std::size_t hidden) {
  QModel m;
  m.n_ = n;
  m.k_ = k;
  m.h_ = hidden;
  m.hp_.hidden = hidden;
  m.w1.assign(hidden * m.dim(), 0.0);
  m.b1.assign(hidden, 0.0);
  m.w2.assign(m.dim() * hidden, 0.0);
  m.b2.assign(m.dim(), 0.0);
  return m;
}

bool QModel::finite() const { return all_finite(w1) && all_finite(b1) && all_finite(w2) && all_finite(b2); }

nlohmann::json QModel::to_json() const {
  return {{"v", 1},
          {"dims", {n_, k_, h_}},
          {"W1", w1},
          {"b1", b1},
          {"W2", w2},
          {"b2", b2},
          {"hyperparameters", hp_.to_json()},
          {"seed", seed_}};
}

QModel QModel::from_json(const nlohmann::json& j) {
  QModel m;
  try {
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw InputError("checkpoint: dims must be [n, k, h]");
    m.n_ = dims[0].get<std::size_t>();
    m.k_ = dims[1].get<int>();
    m.h_ = dims[2].get<std::size_t>();
    m.w1 = j.at("W1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("W2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    if (j.contains("hyperparameters")) m.hp_ = Hyperparameters::from_json(j["hyperparameters"]);
    m.hp_.hidden = m.h_;
    m.seed_ = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  if (m.n_ == 0 || m.k_ < 1 || m.h_ == 0) throw DimensionError("checkpoint: dims must be positive");
  const std::size_t d = m.dim();
  if (m.w1.size() != m.h_ * d || m.b1.size() != m.h_ || m.w2.size() != d * m.h_ || m.b2.size() != d) {
    throw DimensionError("checkpoint: weight array sizes do not match dims");
  }
  if (!m.finite()) throw NumericalError("checkpoint: non-finite weights");
  return m;
}

std::vector<double> encode_state(const Assignment& assignment) {
  assignment.validate();
  const auto k = static_cast<std::size_t>(assignment.k);
  std::vector<double> x(assignment.size() * k, 0.0);
  for (std::size_t i = 0; i < assignment.size(); ++i) x[i * k + static_cast<std::size_t>(assignment.labels[i])] = 1.0;
  return x;
}

std::vector<double> q_forward(const QModel& model, std::span<const double> state) {
  if (state.size() != model.dim()) {
    throw DimensionError("state vector has length " + std::to_string(state.size()) + ", model expects " +
                         std::to_string(model.dim()));
  }
  return forward(model, state).out;
}

Action select_action(const QModel& model, const Assignment& assignment, double epsilon, Rng& rng) {
  check_dims(model, assignment);
  if (assignment.k < 2) throw InputError("no valid actions with a single group");
  const auto k = static_cast<std::size_t>(assignment.k);
  const std::size_t n = assignment.size();
  if (rng.uniform01() < epsilon) {
    const auto idx = rng.uniform_index(n * (k - 1));
    const std::size_t node = idx / (k - 1);
    auto label = static_cast<int>(idx % (k - 1));
    if (label >= assignment.labels[node]) ++label;
    return {node, label};
  }
  const auto q = q_forward(model, encode_state(assignment));
  Action best{0, -1};
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      if (static_cast<int>(l) == assignment.labels[i]) continue;
      if (best.label < 0 || q[i * k + l] > best_q) {
        best = {i, static_cast<int>(l)};
        best_q = q[i * k + l];
      }
    }
  }
  return best;
}

Assignment transition(const Assignment& assignment, const Action& action) {
  if (action.node >= assignment.size() || action.label < 0 || action.label >= assignment.k ||
      assignment.labels[action.node] == action.label) {
    throw InputError("invalid action (node " + std::to_string(action.node) + " -> label " +
                     std::to_string(action.label) + ")");
  }
  Assignment next = assignment;
  next.labels[action.node] = action.label;
  return next;
}

double reward(const DocumentGraph& graph, const PairConstraints& feedback, const Assignment& next) {
  if (next.size() != graph.size()) throw DimensionError("assignment length does not match graph size");
  return feedback.all_satisfied(next.labels) ? f_prob(graph, next) : -1.0;
}

std::vector<double> td_targets(const QModel& model, std::span<const Transition> batch) {
  const double gamma = model.hyperparameters().gamma;
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const auto& t : batch) {
    if (t.terminal || gamma == 0.0) {
      targets.push_back(t.reward);
      continue;
    }
    check_dims(model, t.next);
    const auto q = q_forward(model, encode_state(t.next));
    targets.push_back(t.reward + gamma * max_valid_q(q, t.next));
  }
  return targets;
}

double batch_loss(const QModel& model, std::span<const Transition> batch, std::span<const double> targets) {
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto q = q_forward(model, encode_state(batch[i].state));
    const auto a = batch[i].action.node * static_cast<std::size_t>(model.groups()) +
                   static_cast<std::size_t>(batch[i].action.label);
    const double diff = q[a] - targets[i];
    loss += diff * diff;
  }
  return loss / static_cast<double>(batch.size());
}

Gradients loss_gradient(const QModel& model, std::span<const Transition> batch, std::span<const double> targets) {
  const std::size_t d = model.dim();
  const std::size_t h = model.hidden();
  const auto k = static_cast<std::size_t>(model.groups());
  Gradients g{std::vector<double>(model.w1.size(), 0.0), std::vector<double>(h, 0.0),
              std::vector<double>(model.w2.size(), 0.0), std::vector<double>(d, 0.0)};
  const double scale = 2.0 / static_cast<double>(batch.size());
  std::vector<double> dz(h);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    check_dims(model, t.state);
    const auto x = encode_state(t.state);
    const auto act = forward(model, x);
    const std::size_t a = t.action.node * k + static_cast<std::size_t>(t.action.label);
    const double dq = scale * (act.out[a] - targets[i]);
    // Only the taken action's output carries error.
    const double* w2row = model.w2.data() + a * h;
    for (std::size_t r = 0; r < h; ++r) {
      g.w2[a * h + r] += dq * act.hidden[r];
      dz[r] = act.pre[r] > 0.0 ? dq * w2row[r] : 0.0;
    }
    g.b2[a] += dq;
    for (std::size_t r = 0; r < h; ++r) {
      if (dz[r] == 0.0) continue;
      g.b1[r] += dz[r];
      for (std::size_t c = 0; c < d; ++c) {
        if (x[c] != 0.0) g.w1[r * d + c] += dz[r] * x[c];
      }
    }
  }
  for_each_param(g, [](const std::vector<double>& v) {
    if (!all_finite(v)) throw NumericalError("non-finite gradient in TD update");
  });
  return g;
}

MomentumSgd::MomentumSgd(const QModel& model)
    : velocity_{std::vector<double>(model.w1.size(), 0.0), std::vector<double>(model.b1.size(), 0.0),
                std::vector<double>(model.w2.size(), 0.0), std::vector<double>(model.b2.size(), 0.0)} {}

void MomentumSgd::step(QModel& model, const Gradients& grad) {
  const double lr = model.hyperparameters().learning_rate;
  const double mu = model.hyperparameters().momentum;
  auto apply = [&](std::vector<double>& param, std::vector<double>& vel, const std::vector<double>& g) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      vel[i] = mu * vel[i] + g[i];
      param[i] -= lr * vel[i];
    }
  };
  apply(model.w1, velocity_.w1, grad.w1);
  apply(model.b1, velocity_.b1, grad.b1);
  apply(model.w2, velocity_.w2, grad.w2);
  apply(model.b2, velocity_.b2, grad.b2);
  if (!model.finite()) throw NumericalError("non-finite weights after TD update");
}

double td_update(QModel& model, MomentumSgd& optimizer, std::span<const Transition> batch) {
  if (batch.empty()) throw InputError("td_update needs a non-empty batch");
  const auto targets = td_targets(model, batch);
  const double loss = batch_loss(model, batch, targets);
  optimizer.step(model, loss_gradient(model, batch, targets));
  return loss;
}

Assignment random_assignment(std::size_t n, int k, Rng& rng) {
  Assignment a{std::vector<int>(n, 0), k};
  for (auto& l : a.labels) l = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)));
  return a;
}

TrainResult train(const DocumentGraph& graph, const PairConstraints& feedback, int k, const Hyperparameters& hp,
                  std::uint64_t seed, const TrainOptions& options) {
  hp.validate();
  const std::size_t n = graph.size();
  if (k < 2) throw InputError("training needs k >= 2");
  if (n < 1) throw InputError("training needs a non-empty graph");
  for (const auto* pairs : {&feedback.positive, &feedback.negative}) {
    for (const auto& [a, b] : *pairs) {
      if (a >= n || b >= n) throw NotFoundError("feedback references a node outside the graph");
    }
  }
  if (auto f = feasibility_check(feedback, n, k, graph.ids()); f.status == FeasibilityStatus::kInfeasible) {
    throw InfeasibleError("infeasible feedback: " + f.reason);
  }

  Rng rng(seed);
  TrainResult result;
  result.model = QModel(n, k, hp, derive_seed(seed, "init"));
  MomentumSgd optimizer(result.model);

  // Best satisfying state, else best (satisfied count, f_prob) seen.
  bool have_best = false;
  auto consider = [&](const Assignment& s) {
    const std::size_t sat = feedback.count_satisfied(s.labels);
    const bool full = sat == feedback.size();
    if (have_best && result.best_terminal && !full) return;
    if (have_best && !full && sat < result.best_satisfied) return;
    const double fp = f_prob(graph, s);
    if (have_best && std::tuple(full, sat, fp) <=
                         std::tuple(result.best_terminal, result.best_satisfied, result.best_f_prob)) {
      return;
    }
    have_best = true;
    result.best = s;
    result.best_f_prob = fp;
    result.best_terminal = full;
    result.best_satisfied = sat;
  };

  // Incumbent of the current restart segment.
  std::optional<Assignment> incumbent;
  double incumbent_f = 0.0;
  std::size_t stale = 0;
  auto track = [&](const Assignment& s) {
    if (!feedback.all_satisfied(s.labels)) return;
    const double fp = f_prob(graph, s);
    if (!incumbent || fp > incumbent_f) {
      incumbent = s;
      incumbent_f = fp;
      stale = 0;
    }
  };

  const std::size_t cap = hp.step_cap(n);
  for (std::size_t ep = 0; ep < hp.episodes; ++ep) {
    if (options.should_stop && options.should_stop()) {
      result.cancelled = true;
      break;
    }
    const double eps = hp.epsilon_at(ep);
    if (incumbent && hp.restart_patience > 0 && stale >= hp.restart_patience) incumbent.reset();
    Assignment s = (incumbent && rng.uniform01() < hp.incumbent_start_probability) ? *incumbent
                                                                                    : random_assignment(n, k, rng);
    ++stale;
    consider(s);
    track(s);

    std::vector<Transition> trace;
    // Reward is defined on the successor state, so every episode takes at
    // least one step even from a satisfying start.
    for (std::size_t step = 0; step < cap; ++step) {
      const Action a = select_action(result.model, s, eps, rng);
      Assignment next = transition(s, a);
      const bool term = feedback.all_satisfied(next.labels);
      const double r = term ? f_prob(graph, next) : -1.0;
      trace.push_back({s, a, r, next, term});
      s = std::move(next);
      if (term) break;
    }
    consider(s);
    track(s);

    EpisodeLog entry;
    entry.episode = ep;
    entry.steps = trace.size();
    entry.terminal = trace.back().terminal;
    entry.reward = trace.back().reward;
    entry.f_prob = f_prob(graph, s);
    entry.epsilon = eps;
    entry.loss = td_update(result.model, optimizer, trace);
    result.log.push_back(entry);
    if (options.keep_traces) result.traces.push_back(std::move(trace));
    if (options.on_episode) options.on_episode(entry);
  }
  if (!have_best) {
    result.best = Assignment{std::vector<int>(n, 0), k};
    result.best_f_prob = f_prob(graph, result.best);
    result.best_satisfied = feedback.count_satisfied(result.best.labels);
    result.best_terminal = result.best_satisfied == feedback.size();
  }
  return result;
}

ReapplyResult reapply(const QModel& model, const DocumentGraph& graph, const PairConstraints& feedback, int k,
                      std::uint64_t seed) {
  if (model.nodes() != graph.size() || model.groups() != k) {
    throw DimensionError("model was trained for n=" + std::to_string(model.nodes()) +
                         ", k=" + std::to_string(model.groups()) + "; instance has n=" +
                         std::to_string(graph.size()) + ", k=" + std::to_string(k));
  }
  Rng rng(seed);
  ReapplyResult out;
  out.assignment = random_assignment(graph.size(), k, rng);
  out.terminal = feedback.all_satisfied(out.assignment.labels);
  const std::size_t cap = model.hyperparameters().step_cap(graph.size());
  const std::size_t n = graph.size();
  const auto groups = static_cast<std::size_t>(k);
  // Greedy, but never back into a state already on this rollout: a plain
  // argmax policy can oscillate between two states until the cap.
  std::set<std::vector<int>> visited{out.assignment.labels};
  while (!out.terminal && out.steps < cap && k >= 2) {
    const auto q = q_forward(model, encode_state(out.assignment));
    Action best{0, -1};
    double best_q = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < groups; ++l) {
        if (static_cast<int>(l) == out.assignment.labels[i]) continue;
        if (best.label >= 0 && !(q[i * groups + l] > best_q)) continue;
        auto next = out.assignment.labels;
        next[i] = static_cast<int>(l);
        if (visited.count(next)) continue;
        best = {i, static_cast<int>(l)};
        best_q = q[i * groups + l];
      }
    }
    if (best.label < 0) break;
    out.assignment = transition(out.assignment, best);
    visited.insert(out.assignment.labels);
    ++out.steps;
    out.terminal = feedback.all_satisfied(out.assignment.labels);
  }
  out.satisfaction = {feedback.count_satisfied(out.assignment.labels), feedback.size()};
  return out;
}

}  // namespace netsumm
