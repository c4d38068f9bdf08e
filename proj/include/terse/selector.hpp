#pragma once

// Description construction: the greedy value-argmax step, the selection loop
// with strict-improvement stopping and a length cap, and the non-learned
// baselines (full / manual keywords / random-k).

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "terse/core.hpp"

namespace terse {

enum class StopReason { kExhausted, kNoImprovement, kLengthCap };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kExhausted: return "exhausted";
    case StopReason::kNoImprovement: return "no-improvement";
    case StopReason::kLengthCap: return "length-cap";
  }
  return "unknown";
}

struct SelectionStep {
  int feature_id = 0;
  double value = 0;

  bool operator==(const SelectionStep&) const = default;
};

struct SelectionTrace {
  Description chosen;
  std::vector<SelectionStep> steps;  // accepted candidates, in order
  StopReason stop_reason = StopReason::kExhausted;
  double base_value = 0;  // value of the empty description

  bool operator==(const SelectionTrace&) const = default;
};

inline void to_json(json& j, const SelectionStep& s) {
  j = json{{"id", s.feature_id}, {"value", s.value}};
}

inline void to_json(json& j, const SelectionTrace& t) {
  j = json{{"chosen", t.chosen},
           {"steps", t.steps},
           {"stop_reason", to_string(t.stop_reason)}};
}

namespace detail {

// Argmax of value(extend(x, id)) over unused ids; ties keep the lowest id.
template <class ValueFn>
SelectionStep best_extension(ValueFn&& value, const FeatureSet& omega,
                             const Description& x, const TaskSpec& task) {
  SelectionStep best{-1, 0};
  for (int id = 0; id < static_cast<int>(omega.size()); ++id) {
    if (x.contains(id)) continue;
    const double v = value(extend(x, id, omega), task);
    if (best.feature_id < 0 || v > best.value) best = {id, v};
  }
  if (best.feature_id < 0) {
    throw ValidationError("no unused features left to select");
  }
  return best;
}

}  // namespace detail

// One policy step: which unused feature the value model would add next.
template <class ValueFn>
int policy_step(ValueFn&& value, const FeatureSet& omega, const Description& x,
                const TaskSpec& task) {
  return detail::best_extension(value, omega, x, task).feature_id;
}

// Greedy selection from the empty description. A candidate is accepted only
// when it strictly improves the predicted value; the previous value is cached
// rather than re-scored, which is equivalent for a deterministic model.
template <class ValueFn>
SelectionTrace select(ValueFn&& value, const TaskSpec& task,
                      const FeatureSet& omega, int max_len,
                      std::string source = std::string()) {
  if (omega.empty()) throw ValidationError("empty feature set");
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  SelectionTrace trace;
  trace.chosen.source = std::move(source);
  double current = value(trace.chosen, task);
  trace.base_value = current;
  for (;;) {
    if (static_cast<int>(trace.chosen.size()) >= max_len) {
      trace.stop_reason = StopReason::kLengthCap;
      break;
    }
    if (trace.chosen.size() == omega.size()) {
      trace.stop_reason = StopReason::kExhausted;
      break;
    }
    const SelectionStep candidate =
        detail::best_extension(value, omega, trace.chosen, task);
    if (!(candidate.value > current)) {
      trace.stop_reason = StopReason::kNoImprovement;
      break;
    }
    trace.chosen = extend(trace.chosen, candidate.feature_id, omega);
    trace.steps.push_back(candidate);
    current = candidate.value;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Baselines

inline Description full_baseline(const FeatureSet& omega,
                                 std::string source = std::string()) {
  Description out;
  out.source = std::move(source);
  out.selected.reserve(omega.size());
  for (int id = 0; id < static_cast<int>(omega.size()); ++id) {
    out.selected.push_back(id);
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// All features whose text contains any task keyword, case-insensitively.
inline Description manual_baseline(
    const FeatureSet& omega, const TaskSpec& task,
    const std::map<std::string, std::vector<std::string>>& keywords,
    std::string source = std::string()) {
  const auto entry = keywords.find(task.id);
  if (entry == keywords.end()) {
    throw ValidationError("no keywords configured for task '" + task.id + "'");
  }
  std::vector<std::string> lowered;
  lowered.reserve(entry->second.size());
  for (const std::string& k : entry->second) lowered.push_back(to_lower(k));

  Description out;
  out.source = std::move(source);
  for (const Feature& f : omega.features()) {
    const std::string text = to_lower(f.text);
    for (const std::string& k : lowered) {
      if (text.find(k) != std::string::npos) {
        out.selected.push_back(f.id);
        break;
      }
    }
  }
  return out;
}

// k distinct features drawn uniformly, in draw order; k is clamped to the
// feature count.
inline Description random_baseline(const FeatureSet& omega, int k, Rng& rng,
                                   std::string source = std::string()) {
  if (k < 0) throw ValidationError("k must be >= 0");
  Description out;
  out.source = std::move(source);
  out.selected = sample_indices(
      rng, static_cast<int>(omega.size()),
      std::min(k, static_cast<int>(omega.size())));
  return out;
}

}  // namespace terse
