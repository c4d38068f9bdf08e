#pragma once

// Core domain types: state features, descriptions, tasks, actions and the
// deterministic description-extension step, plus text rendering of a
// (task, description) pair.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace terse {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated domain invariant or operation precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Remote endpoint unreachable or returned a malformed payload.
class ActorError : public Error {
 public:
  using Error::Error;
};

// Bad record in a line-delimited input file.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// ---------------------------------------------------------------------------
// Deterministic RNG helpers. std::uniform_int_distribution is
// implementation-defined, so draws go through these to keep outputs stable
// across standard libraries.

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t scramble64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t s = scramble64(a);
  s = scramble64(s ^ (b + 0x9e3779b97f4a7c15ull));
  s = scramble64(s ^ (c + 0xbf58476d1ce4e5b9ull));
  return s;
}

// Unbiased draw from [0, n).
inline int rand_below(Rng& rng, int n) {
  if (n <= 0) throw ValidationError("rand_below requires n > 0");
  const auto un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % un;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return static_cast<int>(v % un);
  }
}

// Uniform double in [0, 1).
inline double rand_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    std::swap(v[static_cast<std::size_t>(i)],
              v[static_cast<std::size_t>(rand_below(rng, i + 1))]);
  }
}

// k distinct values drawn uniformly from 0..n-1, in draw order.
inline std::vector<int> sample_indices(Rng& rng, int n, int k) {
  if (k < 0 || k > n) throw ValidationError("sample_indices: k out of range");
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + rand_below(rng, n - i);
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

// ---------------------------------------------------------------------------
// Features and feature sets

struct Feature {
  int id = 0;
  std::string text;

  bool operator==(const Feature&) const = default;
};

inline void validate_feature_text(std::string_view text) {
  if (text.empty()) throw ValidationError("feature text must be non-empty");
  if (text.find('\n') != std::string_view::npos ||
      text.find('\r') != std::string_view::npos) {
    throw ValidationError("feature text must not contain newlines");
  }
}

// The exhaustive set of features true in one state. Ids are 0..n-1 in list
// order and descriptions reference features by id.
class FeatureSet {
 public:
  FeatureSet() = default;

  explicit FeatureSet(std::vector<std::string> texts) {
    features_.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      validate_feature_text(texts[i]);
      for (std::size_t j = 0; j < i; ++j) {
        if (features_[j].text == texts[i]) {
          throw ValidationError("duplicate feature text: " + texts[i]);
        }
      }
      features_.push_back(Feature{static_cast<int>(i), std::move(texts[i])});
    }
  }

  std::size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }

  const Feature& at(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= features_.size()) {
      throw ValidationError("unknown feature id " + std::to_string(id));
    }
    return features_[static_cast<std::size_t>(id)];
  }

  const std::vector<Feature>& features() const { return features_; }

  std::optional<int> find(std::string_view text) const {
    for (const Feature& f : features_) {
      if (f.text == text) return f.id;
    }
    return std::nullopt;
  }

  bool operator==(const FeatureSet&) const = default;

 private:
  std::vector<Feature> features_;
};

// ---------------------------------------------------------------------------
// Descriptions

// An ordered subset of a parent FeatureSet, held as feature ids in insertion
// order. `source` names the parent set (scene or step key).
struct Description {
  std::vector<int> selected;
  std::string source;

  std::size_t size() const { return selected.size(); }
  bool empty() const { return selected.empty(); }
  bool contains(int id) const {
    return std::find(selected.begin(), selected.end(), id) != selected.end();
  }

  bool operator==(const Description&) const = default;
};

// Transition step: returns x with one feature appended, x is untouched.
inline Description extend(const Description& x, int feature_id,
                          const FeatureSet& parent) {
  parent.at(feature_id);  // throws on unknown id
  if (x.contains(feature_id)) {
    throw ValidationError("duplicate feature id " + std::to_string(feature_id) +
                          " in description");
  }
  Description out = x;
  out.selected.push_back(feature_id);
  return out;
}

// ---------------------------------------------------------------------------
// Tasks and actions

struct TaskSpec {
  std::string id;
  std::string description;

  bool operator==(const TaskSpec&) const = default;
};

inline void validate_task(const TaskSpec& t) {
  if (t.description.empty()) {
    throw ValidationError("task description must be non-empty");
  }
}

struct ActionLabel {
  std::string text;

  bool operator==(const ActionLabel&) const = default;
  auto operator<=>(const ActionLabel&) const = default;
};

// One recorded expert decision: the exhaustive feature set of the state, the
// task, the expert's action and the actions that were admissible.
struct ExpertStep {
  FeatureSet feature_set;
  TaskSpec task;
  ActionLabel expert_action;
  std::vector<ActionLabel> admissible;

  bool operator==(const ExpertStep&) const = default;
};

inline void validate_step(const ExpertStep& step) {
  validate_task(step.task);
  if (step.admissible.empty()) {
    throw ValidationError("admissible action list must be non-empty");
  }
  for (std::size_t i = 0; i < step.admissible.size(); ++i) {
    if (step.admissible[i].text.empty()) {
      throw ValidationError("admissible action text must be non-empty");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (step.admissible[j] == step.admissible[i]) {
        throw ValidationError("duplicate admissible action: " +
                              step.admissible[i].text);
      }
    }
  }
  if (std::find(step.admissible.begin(), step.admissible.end(),
                step.expert_action) == step.admissible.end()) {
    throw ValidationError("expert action '" + step.expert_action.text +
                          "' is not admissible");
  }
}

struct ExpertDataset {
  std::vector<ExpertStep> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

// ---------------------------------------------------------------------------
// Configuration

struct Config {
  double gamma = 1.0;            // must stay 1: prefix labels copy the
                                 // terminal reward exactly
  int max_len = 10;              // description length cap used by the selector
  double kl_coefficient = 1.0;   // pull toward initial parameters in training
  double learning_rate = 0.05;
  int batch_size = 4;
  std::uint64_t rng_seed = 17;
  int epochs = 40;
  int trajectories_per_step = 32;  // random rollouts per expert step
  double boost = 3.0;              // scripted actor: relevant-feature multiplier
  double penalty = 0.5;            // scripted actor: distractor multiplier
  int budget = 10;                 // actions per episode
  int episodes = 50;               // episodes per seed in evaluate
  int workers = 1;
  int hash_dim = 1 << 15;          // feature-hashing width of the value model
  bool greedy_actions = false;

  void validate() const {
    if (gamma != 1.0) {
      throw ConfigError(
          "gamma must be 1: prefix labels equal the terminal reward only "
          "for undiscounted sparse returns");
    }
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    if (kl_coefficient < 0) throw ConfigError("kl_coefficient must be >= 0");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (trajectories_per_step < 1) {
      throw ConfigError("trajectories_per_step must be >= 1");
    }
    if (!(boost > 1.0)) throw ConfigError("boost must be > 1");
    if (!(penalty > 0.0 && penalty < 1.0)) {
      throw ConfigError("penalty must be in (0, 1)");
    }
    if (boost * penalty == 1.0) {
      throw ConfigError("boost * penalty must not equal 1");
    }
    if (budget < 1) throw ConfigError("budget must be >= 1");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (hash_dim < 16) throw ConfigError("hash_dim must be >= 16");
  }
};

// ---------------------------------------------------------------------------
// Rendering

// Template with a {task} and a {features} slot. Rendering is pure string
// substitution so the output is byte-stable.
class PromptTemplate {
 public:
  static constexpr std::string_view kTaskSlot = "{task}";
  static constexpr std::string_view kFeatureSlot = "{features}";

  explicit PromptTemplate(std::string text) : text_(std::move(text)) {
    if (text_.find(kTaskSlot) == std::string::npos ||
        text_.find(kFeatureSlot) == std::string::npos) {
      throw ValidationError(
          "prompt template must contain {task} and {features} slots");
    }
  }

  static const PromptTemplate& instruction() {
    static const PromptTemplate t(
        "Describe the relevant information from the game state for the "
        "current task. Your current task is to {task}. {features}");
    return t;
  }

  const std::string& text() const { return text_; }

  std::string substitute(std::string_view task_description,
                         std::string_view feature_block) const {
    std::string out = text_;
    replace_all(out, kTaskSlot, task_description);
    replace_all(out, kFeatureSlot, feature_block);
    return out;
  }

 private:
  static void replace_all(std::string& s, std::string_view slot,
                          std::string_view value) {
    std::size_t pos = 0;
    while ((pos = s.find(slot, pos)) != std::string::npos) {
      s.replace(pos, slot.size(), value);
      pos += value.size();
    }
  }

  std::string text_;
};

// Selected feature texts joined in insertion order with single spaces.
inline std::string feature_block(const Description& x,
                                 const FeatureSet& parent) {
  std::string out;
  for (std::size_t i = 0; i < x.selected.size(); ++i) {
    if (i > 0) out += ' ';
    out += parent.at(x.selected[i]).text;
  }
  return out;
}

inline std::string render(const Description& x, const TaskSpec& task,
                          const FeatureSet& parent,
                          const PromptTemplate& tpl =
                              PromptTemplate::instruction()) {
  validate_task(task);
  return tpl.substitute(task.description, feature_block(x, parent));
}

// ---------------------------------------------------------------------------
// JSON bindings (record formats are line-delimited objects of these shapes)

inline const json& req(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) {
    throw ValidationError(std::string("missing field '") + field + "'");
  }
  return *it;
}

inline void to_json(json& j, const Feature& f) {
  j = json{{"id", f.id}, {"text", f.text}};
}

inline void from_json(const json& j, Feature& f) {
  req(j, "id").get_to(f.id);
  req(j, "text").get_to(f.text);
}

inline void to_json(json& j, const FeatureSet& fs) {
  j = json{{"features", fs.features()}};
}

inline void from_json(const json& j, FeatureSet& fs) {
  std::vector<Feature> features = req(j, "features").get<std::vector<Feature>>();
  std::vector<std::string> texts;
  texts.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].id != static_cast<int>(i)) {
      throw ValidationError("feature ids must be 0..n-1 in list order");
    }
    texts.push_back(std::move(features[i].text));
  }
  fs = FeatureSet(std::move(texts));
}

inline void to_json(json& j, const Description& d) {
  j = json{{"selected", d.selected}, {"source", d.source}};
}

inline void from_json(const json& j, Description& d) {
  req(j, "selected").get_to(d.selected);
  req(j, "source").get_to(d.source);
  std::vector<int> seen = d.selected;
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw ValidationError("description contains duplicate feature ids");
  }
}

inline void to_json(json& j, const TaskSpec& t) {
  j = json{{"id", t.id}, {"description", t.description}};
}

inline void from_json(const json& j, TaskSpec& t) {
  req(j, "id").get_to(t.id);
  req(j, "description").get_to(t.description);
  validate_task(t);
}

inline void to_json(json& j, const ActionLabel& a) {
  j = json{{"text", a.text}};
}

inline void from_json(const json& j, ActionLabel& a) {
  req(j, "text").get_to(a.text);
  if (a.text.empty()) throw ValidationError("action text must be non-empty");
}

inline void to_json(json& j, const ExpertStep& s) {
  j = json{{"feature_set", s.feature_set},
           {"task", s.task},
           {"expert_action", s.expert_action},
           {"admissible", s.admissible}};
}

inline void from_json(const json& j, ExpertStep& s) {
  req(j, "feature_set").get_to(s.feature_set);
  req(j, "task").get_to(s.task);
  req(j, "expert_action").get_to(s.expert_action);
  req(j, "admissible").get_to(s.admissible);
  validate_step(s);
}

}  // namespace terse
