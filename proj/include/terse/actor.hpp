#pragma once

// The downstream decision maker: scores admissible actions given a rendered
// state description and a task. Ships a deterministic scripted actor used as
// a test oracle; the remote LLM-backed client lives in remote_actor.hpp.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "terse/arrangement.hpp"
#include "terse/core.hpp"

namespace terse {

struct ActorQuery {
  std::string state_text;
  TaskSpec task;
  std::vector<ActionLabel> admissible;
  std::vector<std::string> fewshot;
  // Ground-truth anchor for the scripted oracle actor; real actors ignore it
  // and it never crosses the wire.
  std::optional<ActionLabel> oracle_action;
};

inline void validate_query(const ActorQuery& q) {
  validate_task(q.task);
  if (q.admissible.empty()) {
    throw ValidationError("query needs a non-empty admissible action list");
  }
}

class ActionDistribution {
 public:
  ActionDistribution() = default;

  static ActionDistribution from_weights(std::vector<ActionLabel> actions,
                                         const std::vector<double>& weights) {
    if (actions.size() != weights.size() || actions.empty()) {
      throw ValidationError("weights must match a non-empty action list");
    }
    double total = 0;
    for (double w : weights) {
      if (!(w >= 0) || !std::isfinite(w)) {
        throw ValidationError("action weights must be finite and >= 0");
      }
      total += w;
    }
    if (!(total > 0)) throw ValidationError("action weights sum to zero");
    ActionDistribution dist;
    dist.actions_ = std::move(actions);
    dist.probs_.reserve(weights.size());
    for (double w : weights) dist.probs_.push_back(w / total);
    return dist;
  }

  const std::vector<ActionLabel>& actions() const { return actions_; }
  const std::vector<double>& probs() const { return probs_; }

  double prob_of(const ActionLabel& a) const {
    for (std::size_t i = 0; i < actions_.size(); ++i) {
      if (actions_[i] == a) return probs_[i];
    }
    return 0.0;
  }

 private:
  std::vector<ActionLabel> actions_;
  std::vector<double> probs_;
};

// Numerically safe softmax; equal scores give the uniform distribution.
inline std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) throw ValidationError("softmax of empty score list");
  double top = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("non-finite score");
    top = std::max(top, s);
  }
  std::vector<double> out;
  out.reserve(scores.size());
  double total = 0;
  for (double s : scores) {
    const double e = std::exp(s - top);
    out.push_back(e);
    total += e;
  }
  for (double& e : out) e /= total;
  return out;
}

class Actor {
 public:
  virtual ~Actor() = default;
  virtual ActionDistribution score_actions(const ActorQuery& q) const = 0;
};

// ---------------------------------------------------------------------------
// Scripted oracle actor
//
// Stands in for an LLM actor in tests: the oracle action's weight is
// boost^(relevant features present) * penalty^(distractors present), every
// other action keeps weight 1. Presence is judged per sentence of the
// rendered state text, so the result depends only on which features appear,
// not on their order.

using FeaturePredicate = std::function<bool(std::string_view)>;

struct ScriptedTaskEntry {
  FeaturePredicate is_relevant;
  FeaturePredicate is_distractor;
};

struct ScriptedActorSpec {
  std::map<std::string, ScriptedTaskEntry> tasks;  // keyed by task id
  double boost = 3.0;
  double penalty = 0.5;

  void validate() const {
    if (!(boost > 1.0)) throw ValidationError("boost must be > 1");
    if (!(penalty > 0.0 && penalty < 1.0)) {
      throw ValidationError("penalty must be in (0, 1)");
    }
    if (boost * penalty == 1.0) {
      throw ValidationError("boost * penalty must not equal 1");
    }
  }
};

// Period-terminated sentences of a rendered text, trimmed, without the
// trailing period.
inline std::vector<std::string> sentence_segments(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t stop = text.find('.', start);
    if (stop == std::string_view::npos) stop = text.size();
    std::string_view piece = text.substr(start, stop - start);
    while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
    while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
    if (!piece.empty()) out.emplace_back(piece);
    start = stop + 1;
  }
  return out;
}

inline ActionDistribution scripted_score(const ScriptedActorSpec& spec,
                                         const ActorQuery& q) {
  spec.validate();
  validate_query(q);
  const auto entry = spec.tasks.find(q.task.id);
  if (entry == spec.tasks.end()) {
    throw ValidationError("unknown task '" + q.task.id +
                          "' for scripted actor");
  }
  if (!q.oracle_action) {
    throw ValidationError("scripted actor needs the query's oracle action");
  }
  const auto target = std::find(q.admissible.begin(), q.admissible.end(),
                                *q.oracle_action);
  if (target == q.admissible.end()) {
    throw ValidationError("oracle action '" + q.oracle_action->text +
                          "' is not admissible");
  }

  int relevant = 0;
  int distractors = 0;
  for (const std::string& sentence : sentence_segments(q.state_text)) {
    if (entry->second.is_relevant && entry->second.is_relevant(sentence)) {
      ++relevant;
    }
    if (entry->second.is_distractor &&
        entry->second.is_distractor(sentence)) {
      ++distractors;
    }
  }

  std::vector<double> weights(q.admissible.size(), 1.0);
  weights[static_cast<std::size_t>(target - q.admissible.begin())] =
      std::pow(spec.boost, relevant) * std::pow(spec.penalty, distractors);
  return ActionDistribution::from_weights(q.admissible, weights);
}

class ScriptedActor : public Actor {
 public:
  explicit ScriptedActor(ScriptedActorSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
  }

  ActionDistribution score_actions(const ActorQuery& q) const override {
    return scripted_score(spec_, q);
  }

  ScriptedActorSpec& spec() { return spec_; }
  const ScriptedActorSpec& spec() const { return spec_; }

 private:
  ScriptedActorSpec spec_;
};

// ---------------------------------------------------------------------------
// Predicate builders

// Entry matching sentences by keyword lists (case-sensitive substring).
inline ScriptedTaskEntry make_keyword_entry(
    std::vector<std::string> relevant_keywords,
    std::vector<std::string> distractor_keywords) {
  auto contains_any = [](const std::vector<std::string>& keys,
                         std::string_view s) {
    for (const std::string& k : keys) {
      if (s.find(k) != std::string_view::npos) return true;
    }
    return false;
  };
  return ScriptedTaskEntry{
      [relevant_keywords, contains_any](std::string_view s) {
        return contains_any(relevant_keywords, s);
      },
      [distractor_keywords, contains_any](std::string_view s) {
        return contains_any(distractor_keywords, s);
      }};
}

namespace detail {

// Parses "<subject> is <relation> <object>" where each endpoint is
// "the <label>" or "position <letter>". Returns the two endpoints.
inline bool parse_relation_sentence(std::string_view s, std::string& subject,
                                    std::string& object) {
  static constexpr std::string_view kRelations[] = {
      "to the left of and behind ", "to the left of and beyond ",
      "to the right of and behind ", "to the right of and beyond ",
      "to the left of ", "to the right of ", "behind ", "beyond "};
  const std::size_t is_pos = s.find(" is ");
  if (is_pos == std::string_view::npos) return false;
  const std::string_view subj = s.substr(0, is_pos);
  std::string_view rest = s.substr(is_pos + 4);
  for (std::string_view rel : kRelations) {
    if (rest.substr(0, rel.size()) == rel) {
      rest.remove_prefix(rel.size());
      const auto endpoint_ok = [](std::string_view e) {
        return e.substr(0, 4) == "the " || e.substr(0, 9) == "position ";
      };
      if (!endpoint_ok(subj) || !endpoint_ok(rest)) return false;
      subject = std::string(subj);
      object = std::string(rest);
      return true;
    }
  }
  return false;
}

enum class EndpointKind { kTarget, kPosition, kOther };

inline EndpointKind classify_endpoint(
    std::string_view endpoint, const std::vector<std::string>& targets) {
  if (endpoint.substr(0, 9) == "position ") return EndpointKind::kPosition;
  const std::string_view label = endpoint.substr(4);  // after "the "
  for (const std::string& t : targets) {
    if (label == t) return EndpointKind::kTarget;
  }
  return EndpointKind::kOther;
}

}  // namespace detail

// Entry for an arrangement task: a sentence is relevant when it relates task
// targets and empty positions only (with at least one target), and a
// distractor when it mentions any other object.
inline ScriptedTaskEntry make_arrangement_entry(
    std::vector<std::string> targets) {
  auto classify = [targets](std::string_view s, bool want_relevant) {
    std::string subject, object;
    if (!detail::parse_relation_sentence(s, subject, object)) return false;
    const auto a = detail::classify_endpoint(subject, targets);
    const auto b = detail::classify_endpoint(object, targets);
    const bool any_other = a == detail::EndpointKind::kOther ||
                           b == detail::EndpointKind::kOther;
    if (want_relevant) {
      return !any_other && (a == detail::EndpointKind::kTarget ||
                            b == detail::EndpointKind::kTarget);
    }
    return any_other;
  };
  return ScriptedTaskEntry{
      [classify](std::string_view s) { return classify(s, true); },
      [classify](std::string_view s) { return classify(s, false); }};
}

// ---------------------------------------------------------------------------
// Action selection

// Samples from the distribution, or takes the argmax with ties broken by
// label text when greedy is set.
inline ActionLabel sample_action(const ActionDistribution& dist, Rng& rng,
                                 bool greedy = false) {
  const auto& actions = dist.actions();
  const auto& probs = dist.probs();
  if (actions.empty()) throw ValidationError("empty action distribution");
  if (greedy) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < actions.size(); ++i) {
      if (probs[i] > probs[best] ||
          (probs[i] == probs[best] && actions[i] < actions[best])) {
        best = i;
      }
    }
    return actions[best];
  }
  const double u = rand_unit(rng);
  double acc = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    acc += probs[i];
    if (u < acc) return actions[i];
  }
  return actions.back();
}

}  // namespace terse
