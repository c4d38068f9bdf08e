#pragma once

// Episode runner coupling environment + selector + actor, the evaluation
// matrix with per-variant metrics, expert demo synthesis, external
// trajectory ingestion and run manifests.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "terse/actor.hpp"
#include "terse/arrangement.hpp"
#include "terse/core.hpp"
#include "terse/records.hpp"

namespace terse {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Episodes

struct StepRecord {
  int omega_count = 0;        // |exhaustive feature set|
  int description_count = 0;  // |selected description|
  int rendered_chars = 0;
  std::string action;

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeResult {
  std::string task_id;
  bool success = false;
  int steps_taken = 0;
  std::vector<StepRecord> steps;
  std::uint64_t seed = 0;
  std::string error;  // non-empty marks failed-with-error, not task failure

  bool operator==(const EpisodeResult&) const = default;
};

inline void to_json(json& j, const StepRecord& s) {
  j = json{{"omega_count", s.omega_count},
           {"description_count", s.description_count},
           {"rendered_chars", s.rendered_chars},
           {"action", s.action}};
}

inline void from_json(const json& j, StepRecord& s) {
  req(j, "omega_count").get_to(s.omega_count);
  req(j, "description_count").get_to(s.description_count);
  req(j, "rendered_chars").get_to(s.rendered_chars);
  req(j, "action").get_to(s.action);
}

inline void to_json(json& j, const EpisodeResult& r) {
  j = json{{"task_id", r.task_id},   {"success", r.success},
           {"steps_taken", r.steps_taken}, {"steps", r.steps},
           {"seed", r.seed},         {"error", r.error}};
}

inline void from_json(const json& j, EpisodeResult& r) {
  req(j, "task_id").get_to(r.task_id);
  req(j, "success").get_to(r.success);
  req(j, "steps_taken").get_to(r.steps_taken);
  req(j, "steps").get_to(r.steps);
  req(j, "seed").get_to(r.seed);
  req(j, "error").get_to(r.error);
}

using SelectorFn =
    std::function<Description(const FeatureSet&, const TaskSpec&)>;

// Runs one arrangement episode: generate features, select a description,
// render, score admissible actions, act. Actor or selector failures mark the
// episode failed-with-error instead of propagating.
inline EpisodeResult run_episode(const Scene& scene,
                                 const SelectorFn& selector,
                                 const Actor& actor, int budget, Rng& rng,
                                 bool greedy = false) {
  if (budget < 1) throw ValidationError("budget must be >= 1");
  validate_arrangement_task(scene.task);
  const TaskSpec task = to_task_spec(scene.task);

  EpisodeResult result;
  result.task_id = task.id;
  Grid grid = scene.grid;
  try {
    for (int t = 0; t < budget; ++t) {
      if (is_success(grid, scene.task)) break;
      const FeatureSet omega = generate_features(grid);
      const Description x = selector(omega, task);
      const std::string text = render(x, task, omega);
      const std::vector<MoveAction> moves = admissible_actions(grid);
      ActorQuery q{text, task, action_labels(moves), {},
                   ActionLabel{action_text(expert_policy(grid, scene.task))}};
      const ActionDistribution dist = actor.score_actions(q);
      const ActionLabel chosen = sample_action(dist, rng, greedy);
      std::size_t pick = 0;
      while (q.admissible[pick] != chosen) ++pick;
      result.steps.push_back(StepRecord{static_cast<int>(omega.size()),
                                        static_cast<int>(x.size()),
                                        static_cast<int>(text.size()),
                                        chosen.text});
      grid = apply(grid, moves[pick]);
      ++result.steps_taken;
    }
    result.success = is_success(grid, scene.task);
  } catch (const std::exception& e) {
    result.error = e.what();
    result.success = false;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Expert demonstrations

// Synthesizes expert trajectories on sampled scenes; one ExpertStep per move.
inline ExpertDataset generate_demos(Rng& rng, int trajectories,
                                    const std::vector<std::string>& vocab,
                                    const std::vector<int>& target_counts = {2, 3},
                                    int min_objects = 7, int max_objects = 9,
                                    int budget = 10) {
  if (trajectories < 1) throw ValidationError("need at least one trajectory");
  if (target_counts.empty()) throw ValidationError("no target counts");
  ExpertDataset out;
  for (int i = 0; i < trajectories; ++i) {
    const int n_targets =
        target_counts[static_cast<std::size_t>(i) % target_counts.size()];
    const int n_objects =
        min_objects + rand_below(rng, max_objects - min_objects + 1);
    Scene scene =
        sample_scene(rng, n_targets, n_objects - n_targets, vocab, budget);
    const TaskSpec task = to_task_spec(scene.task);
    Grid grid = scene.grid;
    int moves = 0;
    while (!is_success(grid, scene.task)) {
      if (moves >= budget) {
        throw Error("expert exceeded the action budget while generating demos");
      }
      const MoveAction a = expert_policy(grid, scene.task);
      out.steps.push_back(ExpertStep{generate_features(grid), task,
                                     ActionLabel{action_text(a)},
                                     action_labels(admissible_actions(grid))});
      grid = apply(grid, a);
      ++moves;
    }
  }
  return out;
}

// Scripted-actor entries for every arrangement task in a dataset (task ids
// of the form "arrange:a,b,c").
inline ScriptedActorSpec scripted_spec_for_tasks(
    const std::vector<TaskSpec>& tasks, double boost, double penalty) {
  ScriptedActorSpec spec;
  spec.boost = boost;
  spec.penalty = penalty;
  for (const TaskSpec& task : tasks) {
    if (spec.tasks.count(task.id)) continue;
    constexpr std::string_view prefix = "arrange:";
    if (task.id.substr(0, prefix.size()) != prefix) continue;
    std::vector<std::string> targets;
    std::string rest = task.id.substr(prefix.size());
    std::size_t start = 0;
    while (start <= rest.size()) {
      const std::size_t stop = rest.find(',', start);
      targets.push_back(rest.substr(
          start, stop == std::string::npos ? std::string::npos : stop - start));
      if (stop == std::string::npos) break;
      start = stop + 1;
    }
    spec.tasks.emplace(task.id, make_arrangement_entry(std::move(targets)));
  }
  spec.validate();
  return spec;
}

inline ScriptedActorSpec scripted_spec_for_dataset(const ExpertDataset& demos,
                                                   double boost,
                                                   double penalty) {
  std::vector<TaskSpec> tasks;
  tasks.reserve(demos.size());
  for (const ExpertStep& s : demos.steps) tasks.push_back(s.task);
  return scripted_spec_for_tasks(tasks, boost, penalty);
}

// ---------------------------------------------------------------------------
// Ingestion

// Validates a line-delimited ExpertStep file; schema errors carry the line.
inline ExpertDataset ingest_external_trajectories(
    const std::filesystem::path& path) {
  ExpertDataset out;
  out.steps = read_jsonl<ExpertStep>(path);
  if (out.empty()) {
    throw ValidationError("empty dataset: " + path.string());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct VariantMetrics {
  std::string variant;
  int episodes = 0;
  int errors = 0;
  double success_rate = 0;
  double se_success = 0;      // standard error across base seeds
  double mean_reduction = 0;  // mean of 1 - |x_f| / |omega| over steps
  double mean_chars = 0;

  bool operator==(const VariantMetrics&) const = default;
};

inline void to_json(json& j, const VariantMetrics& m) {
  j = json{{"variant", m.variant},         {"episodes", m.episodes},
           {"errors", m.errors},           {"success_rate", m.success_rate},
           {"se_success", m.se_success},   {"mean_reduction", m.mean_reduction},
           {"mean_chars", m.mean_chars}};
}

struct EpisodeRecord {
  std::string variant;
  std::uint64_t base_seed = 0;
  int episode = 0;
  EpisodeResult result;

  bool operator==(const EpisodeRecord&) const = default;
};

inline void to_json(json& j, const EpisodeRecord& r) {
  to_json(j, r.result);
  j["variant"] = r.variant;
  j["base_seed"] = r.base_seed;
  j["episode"] = r.episode;
}

inline void from_json(const json& j, EpisodeRecord& r) {
  from_json(j, r.result);
  req(j, "variant").get_to(r.variant);
  req(j, "base_seed").get_to(r.base_seed);
  req(j, "episode").get_to(r.episode);
}

// Pure fold of episode records into per-variant metrics, in the order
// variant names first appear.
inline std::vector<VariantMetrics> fold_metrics(
    const std::vector<EpisodeRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EpisodeRecord*>> by_variant;
  for (const EpisodeRecord& r : records) {
    auto [it, inserted] = by_variant.try_emplace(r.variant);
    if (inserted) order.push_back(r.variant);
    it->second.push_back(&r);
  }

  std::vector<VariantMetrics> out;
  for (const std::string& name : order) {
    const auto& group = by_variant[name];
    VariantMetrics m;
    m.variant = name;
    m.episodes = static_cast<int>(group.size());
    std::map<std::uint64_t, std::pair<int, int>> per_seed;  // ok, success
    double reduction = 0, chars = 0;
    long step_count = 0;
    int ok = 0, successes = 0;
    for (const EpisodeRecord* r : group) {
      if (!r->result.error.empty()) {
        ++m.errors;
        continue;
      }
      ++ok;
      auto& bucket = per_seed[r->base_seed];
      ++bucket.first;
      if (r->result.success) {
        ++successes;
        ++bucket.second;
      }
      for (const StepRecord& s : r->result.steps) {
        reduction += 1.0 - static_cast<double>(s.description_count) /
                               static_cast<double>(s.omega_count);
        chars += s.rendered_chars;
        ++step_count;
      }
    }
    m.success_rate = ok > 0 ? static_cast<double>(successes) / ok : 0.0;
    m.mean_reduction = step_count > 0 ? reduction / static_cast<double>(step_count) : 0.0;
    m.mean_chars = step_count > 0 ? chars / static_cast<double>(step_count) : 0.0;
    if (per_seed.size() > 1) {
      double mean = 0;
      std::vector<double> rates;
      for (const auto& [seed, bucket] : per_seed) {
        const double rate = bucket.first > 0
                                ? static_cast<double>(bucket.second) / bucket.first
                                : 0.0;
        rates.push_back(rate);
        mean += rate;
      }
      mean /= static_cast<double>(rates.size());
      double var = 0;
      for (const double r : rates) var += (r - mean) * (r - mean);
      var /= static_cast<double>(rates.size() - 1);
      m.se_success = std::sqrt(var / static_cast<double>(rates.size()));
    }
    out.push_back(std::move(m));
  }
  return out;
}

using SelectorFactory = std::function<SelectorFn(std::uint64_t episode_seed)>;

struct EvalVariant {
  std::string name;
  SelectorFactory make;
};

struct EvalPlan {
  std::vector<EvalVariant> variants;
  const Actor* actor = nullptr;  // defaults to a scripted actor over the
                                 // episode tasks
  std::vector<std::uint64_t> seeds = {17};
  int episodes_per_seed = 10;
  std::vector<int> target_counts = {2, 3, 4};
  std::vector<std::string> vocab;
  int min_objects = 7;
  int max_objects = 9;
  int budget = 10;
  bool greedy = false;
  int workers = 1;
  double boost = 3.0;
  double penalty = 0.5;
};

struct EvalOutput {
  std::vector<EpisodeRecord> records;
  std::vector<VariantMetrics> metrics;
};

inline std::string metrics_table(const std::vector<VariantMetrics>& metrics) {
  std::string out =
      "variant           episodes  errors  success   se        reduction  chars\n";
  char line[160];
  for (const VariantMetrics& m : metrics) {
    std::snprintf(line, sizeof line,
                  "%-17s %-9d %-7d %-9.4f %-9.4f %-10.4f %.1f\n",
                  m.variant.c_str(), m.episodes, m.errors, m.success_rate,
                  m.se_success, m.mean_reduction, m.mean_chars);
    out += line;
  }
  return out;
}

inline void write_eval_output(const std::filesystem::path& dir,
                              const EvalOutput& out) {
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "episodes.jsonl", out.records);
  write_jsonl(dir / "metrics.jsonl", out.metrics);
  std::ofstream table(dir / "table.txt", std::ios::binary | std::ios::trunc);
  table << metrics_table(out.metrics);
}

// Runs the variant x seed x episode matrix. Scenes depend only on
// (seed, episode), so every variant sees the same scenes. Episodes run on up
// to plan.workers threads; outputs are aggregated in job order, so worker
// count never changes the result. On failure, whatever finished is flushed
// to out_dir before the error propagates.
inline EvalOutput evaluate(const EvalPlan& plan,
                           const std::filesystem::path& out_dir = {}) {
  if (plan.variants.empty()) throw ConfigError("no variants to evaluate");
  if (plan.episodes_per_seed < 1) throw ConfigError("episodes must be >= 1");
  if (plan.seeds.empty()) throw ConfigError("no seeds");
  if (plan.workers < 1) throw ConfigError("workers must be >= 1");
  if (plan.vocab.empty()) throw ConfigError("no scene vocabulary");

  struct Job {
    std::size_t variant = 0;
    std::uint64_t base_seed = 0;
    int episode = 0;
    Scene scene;
    std::uint64_t episode_seed = 0;
  };

  // Scenes are generated up front (deterministically) so the scripted actor
  // can be primed with every episode task.
  std::vector<Job> jobs;
  std::vector<TaskSpec> tasks;
  for (std::size_t v = 0; v < plan.variants.size(); ++v) {
    for (const std::uint64_t seed : plan.seeds) {
      for (int e = 0; e < plan.episodes_per_seed; ++e) {
        Rng scene_rng(mix_seed(seed, static_cast<std::uint64_t>(e), 0x5ce9e));
        const int n_targets = plan.target_counts[static_cast<std::size_t>(e) %
                                                 plan.target_counts.size()];
        const int n_objects =
            plan.min_objects +
            rand_below(scene_rng, plan.max_objects - plan.min_objects + 1);
        Scene scene = sample_scene(scene_rng, n_targets,
                                   n_objects - n_targets, plan.vocab,
                                   plan.budget);
        if (v == 0) tasks.push_back(to_task_spec(scene.task));
        jobs.push_back(Job{v, seed, e, std::move(scene),
                           mix_seed(seed, static_cast<std::uint64_t>(e),
                                    fnv1a64(plan.variants[v].name))});
      }
    }
  }

  std::unique_ptr<ScriptedActor> fallback;
  const Actor* actor = plan.actor;
  if (actor == nullptr) {
    fallback = std::make_unique<ScriptedActor>(
        scripted_spec_for_tasks(tasks, plan.boost, plan.penalty));
    actor = fallback.get();
  }

  std::vector<EpisodeRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size() || failed.load()) return;
      const Job& job = jobs[i];
      try {
        Rng rng(job.episode_seed);
        const SelectorFn selector =
            plan.variants[job.variant].make(job.episode_seed);
        EpisodeResult result = run_episode(job.scene, selector, *actor,
                                           plan.budget, rng, plan.greedy);
        result.seed = job.episode_seed;
        records[i] = EpisodeRecord{plan.variants[job.variant].name,
                                   job.base_seed, job.episode,
                                   std::move(result)};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failure = e.what();
        failed.store(true);
        return;
      }
    }
  };

  const int n_workers =
      std::min<int>(plan.workers, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  EvalOutput out;
  out.records = std::move(records);
  if (failed.load()) {
    std::vector<EpisodeRecord> done;
    for (EpisodeRecord& r : out.records) {
      if (!r.variant.empty()) done.push_back(std::move(r));
    }
    out.records = std::move(done);
    out.metrics = fold_metrics(out.records);
    if (!out_dir.empty()) write_eval_output(out_dir, out);
    throw Error("evaluate failed: " + failure);
  }
  out.metrics = fold_metrics(out.records);
  if (!out_dir.empty()) write_eval_output(out_dir, out);
  return out;
}

// ---------------------------------------------------------------------------
// Manifests

struct Manifest {
  std::string command;
  std::string version = std::string(kVersion);
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::string> outputs;
};

inline void to_json(json& j, const Manifest& m) {
  j = json{{"command", m.command},
           {"version", m.version},
           {"seed", m.seed},
           {"config_hash", m.config_hash},
           {"outputs", m.outputs}};
}

inline void write_manifest(const std::filesystem::path& dir,
                           const Manifest& m) {
  write_json_file(dir / "manifest.json", json(m));
}

}  // namespace terse
