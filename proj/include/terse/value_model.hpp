#pragma once

// Reference value model: a linear scorer over hashed n-gram features of the
// rendered (task, description) text. Tokens that also occur in the task
// description are additionally hashed under a shared placeholder, which lets
// weights learned on training object names transfer to unseen ones.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "terse/core.hpp"

namespace terse {

struct FeaturizerConfig {
  int dim = 1 << 15;
  int max_ngram = 3;
  bool task_abstraction = true;

  bool operator==(const FeaturizerConfig&) const = default;
};

inline void to_json(json& j, const FeaturizerConfig& c) {
  j = json{{"dim", c.dim},
           {"max_ngram", c.max_ngram},
           {"task_abstraction", c.task_abstraction}};
}

inline void from_json(const json& j, FeaturizerConfig& c) {
  req(j, "dim").get_to(c.dim);
  req(j, "max_ngram").get_to(c.max_ngram);
  req(j, "task_abstraction").get_to(c.task_abstraction);
  if (c.dim < 16) throw ValidationError("featurizer dim must be >= 16");
  if (c.max_ngram < 1) throw ValidationError("max_ngram must be >= 1");
}

using SparseVector = std::vector<std::pair<int, double>>;  // sorted by index

class TextFeaturizer {
 public:
  explicit TextFeaturizer(FeaturizerConfig config = {})
      : config_(config) {}

  const FeaturizerConfig& config() const { return config_; }

  // Lowercased word tokens plus '.', ',' and ':' kept as their own tokens.
  static std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (const char raw : text) {
      const auto c = static_cast<unsigned char>(raw);
      if (std::isalnum(c)) {
        cur += static_cast<char>(std::tolower(c));
        continue;
      }
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      if (raw == '.' || raw == ',' || raw == ':') out.push_back(std::string(1, raw));
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

  SparseVector featurize(std::string_view rendered,
                         std::string_view task_description) const {
    const std::vector<std::string> tokens = tokenize(rendered);
    std::map<int, double> acc;
    acc[0] += 1.0;  // bias
    add_ngrams(acc, tokens, 'r');
    if (config_.task_abstraction) {
      add_ngrams(acc, abstract_tokens(tokens, task_description), 'a');
    }
    return SparseVector(acc.begin(), acc.end());
  }

 private:
  // Maps tokens through the task vocabulary: task tokens become "<t>", other
  // multi-letter words outside a small grammar list become "<o>".
  std::vector<std::string> abstract_tokens(
      const std::vector<std::string>& tokens,
      std::string_view task_description) const {
    static const std::set<std::string, std::less<>> kGrammar = {
        "the", "is",     "to",     "of",    "and",  "an",   "in",
        "on",  "at",     "for",    "position", "left", "right",
        "behind", "beyond", ".", ",", ":"};
    std::set<std::string> task_tokens;
    for (std::string& t : tokenize(task_description)) {
      task_tokens.insert(std::move(t));
    }
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) {
      if (task_tokens.count(t)) {
        out.emplace_back("<t>");
      } else if (t.size() == 1 || kGrammar.count(t)) {
        out.push_back(t);
      } else {
        out.emplace_back("<o>");
      }
    }
    return out;
  }

  void add_ngrams(std::map<int, double>& acc,
                  const std::vector<std::string>& tokens, char stream) const {
    std::string key;
    for (int n = 1; n <= config_.max_ngram; ++n) {
      if (static_cast<int>(tokens.size()) < n) break;
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        key.assign(1, stream);
        key += '|';
        key += static_cast<char>('0' + n);
        for (int k = 0; k < n; ++k) {
          key += '\x1f';
          key += tokens[i + static_cast<std::size_t>(k)];
        }
        const std::uint64_t h = fnv1a64(key);
        const int idx = 1 + static_cast<int>((h >> 1) %
                            static_cast<std::uint64_t>(config_.dim - 1));
        acc[idx] += (h & 1) ? 1.0 : -1.0;
      }
    }
  }

  FeaturizerConfig config_;
};

inline double sparse_dot(const SparseVector& v,
                         const std::vector<double>& w) {
  double out = 0;
  for (const auto& [idx, val] : v) out += w[static_cast<std::size_t>(idx)] * val;
  return out;
}

// ---------------------------------------------------------------------------

// Linear value model V(description, task). Weights start at zero; the
// snapshot taken at construction (or restored from a checkpoint) anchors the
// training regularizer.
class ValueModel {
 public:
  explicit ValueModel(FeaturizerConfig config = {})
      : featurizer_(config),
        weights_(static_cast<std::size_t>(config.dim), 0.0),
        initial_(weights_) {}

  const TextFeaturizer& featurizer() const { return featurizer_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& initial_weights() const { return initial_; }

  double predict_text(std::string_view rendered,
                      const TaskSpec& task) const {
    return sparse_dot(featurizer_.featurize(rendered, task.description),
                      weights_);
  }

  double predict(const FeatureSet& omega, const Description& x,
                 const TaskSpec& task) const {
    return predict_text(render(x, task, omega), task);
  }

  // Closure suitable for the selector.
  auto scorer(const FeatureSet& omega) const {
    return [this, &omega](const Description& x, const TaskSpec& task) {
      return predict(omega, x, task);
    };
  }

  json checkpoint() const {
    json j;
    j["featurizer"] = featurizer_.config();
    j["weights"] = sparse_json(weights_);
    j["initial"] = sparse_json(initial_);
    return j;
  }

  static ValueModel from_checkpoint(const json& j) {
    ValueModel model(req(j, "featurizer").get<FeaturizerConfig>());
    load_sparse(req(j, "weights"), model.weights_);
    load_sparse(req(j, "initial"), model.initial_);
    return model;
  }

 private:
  static json sparse_json(const std::vector<double>& w) {
    json out = json::object();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] != 0.0) out[std::to_string(i)] = w[i];
    }
    return out;
  }

  static void load_sparse(const json& j, std::vector<double>& w) {
    std::fill(w.begin(), w.end(), 0.0);
    for (const auto& [key, value] : j.items()) {
      const std::size_t idx = std::stoul(key);
      if (idx >= w.size()) throw ValidationError("weight index out of range");
      w[idx] = value.get<double>();
    }
  }

  TextFeaturizer featurizer_;
  std::vector<double> weights_;
  std::vector<double> initial_;
};

}  // namespace terse
