#pragma once

// Reward computation, one-shot random-policy collection of the value dataset
// with Monte Carlo labels, action-balancing upsampling, and value model
// training.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "terse/actor.hpp"
#include "terse/core.hpp"
#include "terse/value_model.hpp"

namespace terse {

// One training record: a description prefix, its task, and the terminal
// reward of the trajectory it came from. source_step indexes the anchoring
// step in the expert dataset.
struct ValueExample {
  TaskSpec task;
  Description prefix;
  double label = 0;
  int source_step = 0;

  bool operator==(const ValueExample&) const = default;
};

inline void to_json(json& j, const ValueExample& e) {
  j = json{{"task", e.task},
           {"prefix", e.prefix},
           {"label", e.label},
           {"source_step", e.source_step}};
}

inline void from_json(const json& j, ValueExample& e) {
  req(j, "task").get_to(e.task);
  req(j, "prefix").get_to(e.prefix);
  req(j, "label").get_to(e.label);
  req(j, "source_step").get_to(e.source_step);
  if (!(e.label >= 0.0 && e.label <= 1.0)) {
    throw ValidationError("label must lie in [0, 1]");
  }
  if (e.source_step < 0) throw ValidationError("source_step must be >= 0");
}

struct ValueDataset {
  std::vector<ValueExample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// ---------------------------------------------------------------------------
// Reward (sparse, terminal-only)

// Probability the actor assigns to the step's expert action given the
// rendered description. Callers average over steps that share an identical
// (feature set, task) pair; non-terminal prefixes earn 0 by construction and
// never call this.
inline double reward(const Description& x_f, const ExpertStep& step,
                     const Actor& actor,
                     const PromptTemplate& tpl = PromptTemplate::instruction()) {
  for (const int id : x_f.selected) {
    if (id < 0 || static_cast<std::size_t>(id) >= step.feature_set.size()) {
      throw ValidationError(
          "description is not a subset of the step's feature set (id " +
          std::to_string(id) + ")");
    }
  }
  ActorQuery q{render(x_f, step.task, step.feature_set, tpl), step.task,
               step.admissible, {}, step.expert_action};
  return actor.score_actions(q).prob_of(step.expert_action);
}

namespace detail {

// Steps with identical (feature set, task) share one reward expectation.
inline std::vector<std::vector<int>> duplicate_groups(
    const ExpertDataset& demos) {
  std::map<std::string, int> first_seen;
  std::vector<std::vector<int>> group_of_step(demos.size());
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(demos.size()); ++i) {
    std::string key = demos.steps[static_cast<std::size_t>(i)].task.id;
    key += '\x1e';
    key += demos.steps[static_cast<std::size_t>(i)].task.description;
    for (const Feature& f :
         demos.steps[static_cast<std::size_t>(i)].feature_set.features()) {
      key += '\x1f';
      key += f.text;
    }
    const auto [it, inserted] =
        first_seen.emplace(std::move(key), static_cast<int>(groups.size()));
    if (inserted) groups.emplace_back();
    groups[static_cast<std::size_t>(it->second)].push_back(i);
  }
  std::vector<std::vector<int>> out(demos.size());
  for (const std::vector<int>& g : groups) {
    for (const int step : g) out[static_cast<std::size_t>(step)] = g;
  }
  return out;
}

}  // namespace detail

// Terminal reward for a prefix anchored at step `anchor`, averaged over all
// steps sharing that step's (feature set, task).
inline double expected_reward(const Description& x_f,
                              const ExpertDataset& demos,
                              const std::vector<std::vector<int>>& groups,
                              int anchor, const Actor& actor) {
  const std::vector<int>& group = groups[static_cast<std::size_t>(anchor)];
  double total = 0;
  for (const int member : group) {
    total += reward(x_f, demos.steps[static_cast<std::size_t>(member)], actor);
  }
  return total / static_cast<double>(group.size());
}

// ---------------------------------------------------------------------------
// Dataset collection

// For every expert step, samples trajectories_per_step random descriptions:
// terminal length L uniform in [1, min(max_len, |features|)], features drawn
// uniformly without replacement in random order. The terminal reward is
// computed once and every prefix (including the empty one) carries it as its
// label, which is the exact Monte Carlo return because gamma = 1 and the
// reward is terminal-only.
inline ValueDataset collect_value_dataset(const ExpertDataset& demos,
                                          const Actor& actor,
                                          const Config& config, Rng& rng) {
  config.validate();
  if (demos.empty()) throw ValidationError("empty expert dataset");
  const std::vector<std::vector<int>> groups = detail::duplicate_groups(demos);

  ValueDataset out;
  for (int s = 0; s < static_cast<int>(demos.size()); ++s) {
    const ExpertStep& step = demos.steps[static_cast<std::size_t>(s)];
    const int n = static_cast<int>(step.feature_set.size());
    if (n == 0) {
      throw ValidationError("empty feature set at expert step " +
                            std::to_string(s));
    }
    const std::string source = "step:" + std::to_string(s);
    const int max_len = std::min(config.max_len, n);
    for (int k = 0; k < config.trajectories_per_step; ++k) {
      const int terminal_len = 1 + rand_below(rng, max_len);
      const std::vector<int> ids = sample_indices(rng, n, terminal_len);
      Description terminal{ids, source};
      const double label = expected_reward(terminal, demos, groups, s, actor);
      Description prefix{{}, source};
      out.examples.push_back(ValueExample{step.task, prefix, label, s});
      for (const int id : ids) {
        prefix = extend(prefix, id, step.feature_set);
        out.examples.push_back(ValueExample{step.task, prefix, label, s});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Upsampling

// Duplicates examples until every expert action's total count is within a
// factor two of the most common action's count. Duplicates are appended
// after the originals, grouped by first appearance of the action.
inline ValueDataset upsample(const ValueDataset& dataset,
                             const ExpertDataset& demos, Rng& rng) {
  if (dataset.empty()) throw ValidationError("empty value dataset");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_action;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const int step = dataset.examples[i].source_step;
    if (step < 0 || static_cast<std::size_t>(step) >= demos.size()) {
      throw ValidationError("source_step " + std::to_string(step) +
                            " is out of range");
    }
    const std::string& action =
        demos.steps[static_cast<std::size_t>(step)].expert_action.text;
    auto [it, inserted] = by_action.try_emplace(action);
    if (inserted) order.push_back(action);
    it->second.push_back(i);
  }

  std::size_t top = 0;
  for (const auto& [action, members] : by_action) {
    top = std::max(top, members.size());
  }
  const std::size_t floor = (top + 1) / 2;

  ValueDataset out = dataset;
  for (const std::string& action : order) {
    const std::vector<std::size_t>& members = by_action[action];
    std::size_t count = members.size();
    while (count < floor) {
      const std::size_t pick = members[static_cast<std::size_t>(
          rand_below(rng, static_cast<int>(members.size())))];
      out.examples.push_back(dataset.examples[pick]);
      ++count;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainReport {
  int epochs = 0;
  std::vector<double> loss;         // mean squared error per epoch
  std::vector<double> regularizer;  // anchor penalty magnitude per epoch
  int examples_before = 0;
  int examples_after = 0;
  double final_loss = 0;
};

inline void to_json(json& j, const TrainReport& r) {
  j = json{{"epochs", r.epochs},
           {"loss", r.loss},
           {"regularizer", r.regularizer},
           {"examples_before", r.examples_before},
           {"examples_after", r.examples_after},
           {"final_loss", r.final_loss}};
}

// Minibatch SGD on squared error plus kl_coefficient * mean squared distance
// from the model's initial parameters. The anchor term is applied lazily per
// touched weight, which is exact because untouched weights never leave the
// anchor. Deterministic for a fixed config seed.
inline TrainReport train(ValueModel& model, const ValueDataset& dataset,
                         const ExpertDataset& demos, const Config& config,
                         int examples_before = -1) {
  config.validate();
  if (dataset.empty()) throw ValidationError("empty value dataset");

  const std::size_t n = dataset.examples.size();
  std::vector<SparseVector> inputs;
  std::vector<double> labels;
  inputs.reserve(n);
  labels.reserve(n);
  for (const ValueExample& e : dataset.examples) {
    if (e.source_step < 0 ||
        static_cast<std::size_t>(e.source_step) >= demos.size()) {
      throw ValidationError("source_step " + std::to_string(e.source_step) +
                            " is out of range");
    }
    const ExpertStep& step = demos.steps[static_cast<std::size_t>(e.source_step)];
    inputs.push_back(model.featurizer().featurize(
        render(e.prefix, e.task, step.feature_set), e.task.description));
    labels.push_back(e.label);
  }

  std::vector<double>& w = model.weights();
  const std::vector<double>& w0 = model.initial_weights();
  const double dim = static_cast<double>(w.size());
  const double shrink =
      1.0 - 2.0 * config.learning_rate * config.kl_coefficient / dim;
  std::vector<long> last_batch(w.size(), 0);
  long batch_counter = 0;

  const auto settle = [&](std::size_t idx) {
    const long lag = batch_counter - last_batch[idx];
    if (lag > 0 && shrink != 1.0) {
      w[idx] = w0[idx] + (w[idx] - w0[idx]) * std::pow(shrink, static_cast<double>(lag));
    }
    last_batch[idx] = batch_counter;
  };

  Rng rng(mix_seed(config.rng_seed, fnv1a64("train")));
  std::vector<std::size_t> index(n);
  for (std::size_t i = 0; i < n; ++i) index[i] = i;

  TrainReport report;
  report.epochs = config.epochs;
  report.examples_after = static_cast<int>(n);
  report.examples_before =
      examples_before >= 0 ? examples_before : static_cast<int>(n);

  std::map<int, double> grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_vec(index, rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const double batch = static_cast<double>(stop - start);
      grad.clear();
      for (std::size_t b = start; b < stop; ++b) {
        const SparseVector& x = inputs[index[b]];
        for (const auto& [idx, val] : x) {
          settle(static_cast<std::size_t>(idx));
          (void)val;
        }
        const double err = sparse_dot(x, w) - labels[index[b]];
        epoch_loss += err * err;
        for (const auto& [idx, val] : x) {
          grad[idx] += 2.0 * err * val / batch;
        }
      }
      for (const auto& [idx, g] : grad) {
        w[static_cast<std::size_t>(idx)] -= config.learning_rate * g;
      }
      ++batch_counter;
      // Anchor shrink for the weights this batch touched.
      for (const auto& [idx, g] : grad) {
        const auto u = static_cast<std::size_t>(idx);
        if (shrink != 1.0) w[u] = w0[u] + (w[u] - w0[u]) * shrink;
        last_batch[u] = batch_counter;
      }
    }
    // Materialize pending shrink so the reported magnitude is exact.
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] != w0[j]) settle(j);
    }
    const double mse = epoch_loss / static_cast<double>(n);
    if (!std::isfinite(mse)) {
      throw Error("non-finite training loss at epoch " +
                  std::to_string(epoch) +
                  "; lower the learning rate or check the labels");
    }
    double anchor = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double d = w[j] - w0[j];
      anchor += d * d;
    }
    report.loss.push_back(mse);
    report.regularizer.push_back(config.kl_coefficient * anchor / dim);
  }
  report.final_loss = report.loss.back();
  return report;
}

}  // namespace terse
