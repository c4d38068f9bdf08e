#pragma once

// Tabletop arrangement simulator: a 2x5 grid of cells, pairwise
// spatial-relation features, move actions, the left-to-right success rule,
// scene sampling and a synthesized expert policy.
//
// Cell naming: every cell has a fixed letter A..J assigned column by column,
// back row first (A = back-left, B = front-left, ... I = back-right,
// J = front-right). Letters are only surfaced for empty cells; occupied cells
// are referred to by their object label. "Behind" is the back row (larger row
// index), "beyond" the front row.

#include <array>
#include <deque>
#include <string>
#include <vector>

#include "terse/core.hpp"

namespace terse {

inline constexpr int kGridRows = 2;
inline constexpr int kGridCols = 5;
inline constexpr int kGridCells = kGridRows * kGridCols;

// row 0 = front ("beyond" side), row 1 = back ("behind" side)
inline int cell_index(int col, int row) { return col * 2 + (1 - row); }
inline int cell_col(int index) { return index / 2; }
inline int cell_row(int index) { return 1 - index % 2; }
inline char cell_letter(int index) { return static_cast<char>('A' + index); }

inline int letter_cell(char letter) {
  if (letter < 'A' || letter >= 'A' + kGridCells) {
    throw ValidationError(std::string("unknown position letter '") + letter +
                          "'");
  }
  return letter - 'A';
}

inline void validate_object_label(const std::string& label) {
  if (label.empty()) throw ValidationError("object label must be non-empty");
  if (label.find('.') != std::string::npos ||
      label.find('\n') != std::string::npos ||
      label.find(" is ") != std::string::npos) {
    throw ValidationError("object label '" + label +
                          "' contains reserved text");
  }
}

class Grid {
 public:
  Grid() = default;

  static Grid from_cells(std::array<std::string, kGridCells> cells) {
    Grid g;
    g.cells_ = std::move(cells);
    g.validate();
    return g;
  }

  // Rows given left to right; empty string marks an empty cell.
  static Grid from_rows(const std::array<std::string, kGridCols>& front,
                        const std::array<std::string, kGridCols>& back) {
    Grid g;
    for (int col = 0; col < kGridCols; ++col) {
      g.cells_[static_cast<std::size_t>(cell_index(col, 0))] = front[static_cast<std::size_t>(col)];
      g.cells_[static_cast<std::size_t>(cell_index(col, 1))] = back[static_cast<std::size_t>(col)];
    }
    g.validate();
    return g;
  }

  const std::string& label_at(int index) const {
    return cells_.at(static_cast<std::size_t>(index));
  }
  bool is_empty(int index) const { return label_at(index).empty(); }

  std::optional<int> find(std::string_view label) const {
    for (int i = 0; i < kGridCells; ++i) {
      if (cells_[static_cast<std::size_t>(i)] == label) return i;
    }
    return std::nullopt;
  }

  std::vector<int> object_cells() const {
    std::vector<int> out;
    for (int i = 0; i < kGridCells; ++i) {
      if (!is_empty(i)) out.push_back(i);
    }
    return out;
  }

  std::vector<int> empty_cells() const {
    std::vector<int> out;
    for (int i = 0; i < kGridCells; ++i) {
      if (is_empty(i)) out.push_back(i);
    }
    return out;
  }

  int object_count() const {
    return static_cast<int>(object_cells().size());
  }

  bool operator==(const Grid&) const = default;

 private:
  friend Grid apply(const Grid&, const struct MoveAction&);

  void validate() const {
    for (int i = 0; i < kGridCells; ++i) {
      if (is_empty(i)) continue;
      validate_object_label(cells_[static_cast<std::size_t>(i)]);
      for (int j = 0; j < i; ++j) {
        if (cells_[static_cast<std::size_t>(j)] == cells_[static_cast<std::size_t>(i)]) {
          throw ValidationError("duplicate object label '" +
                                cells_[static_cast<std::size_t>(i)] + "'");
        }
      }
    }
  }

  std::array<std::string, kGridCells> cells_{};
};

// Goal: listed objects ordered left to right by column; rows never matter.
struct ArrangementTask {
  std::vector<std::string> targets;
  int budget = 10;
};

inline void validate_arrangement_task(const ArrangementTask& t) {
  if (t.targets.size() < 2 || t.targets.size() > 4) {
    throw ValidationError("arrangement task needs 2..4 targets");
  }
  for (std::size_t i = 0; i < t.targets.size(); ++i) {
    validate_object_label(t.targets[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (t.targets[j] == t.targets[i]) {
        throw ValidationError("duplicate target '" + t.targets[i] + "'");
      }
    }
  }
  if (t.budget < 1) throw ValidationError("budget must be >= 1");
}

inline std::string join_names(const std::vector<std::string>& names,
                              const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += sep;
    out += names[i];
  }
  return out;
}

inline TaskSpec to_task_spec(const ArrangementTask& t) {
  return TaskSpec{"arrange:" + join_names(t.targets, ","),
                  "arrange the objects in the order: " +
                      join_names(t.targets, ", ")};
}

struct MoveAction {
  std::string object;
  char destination = 'A';

  bool operator==(const MoveAction&) const = default;
};

inline std::string action_text(const MoveAction& a) {
  return "move the " + a.object + " to position " + a.destination + ".";
}

inline std::vector<ActionLabel> action_labels(
    const std::vector<MoveAction>& moves) {
  std::vector<ActionLabel> out;
  out.reserve(moves.size());
  for (const MoveAction& m : moves) out.push_back(ActionLabel{action_text(m)});
  return out;
}

// ---------------------------------------------------------------------------
// Features

inline std::string cell_name(const Grid& g, int index) {
  if (g.is_empty(index)) {
    return std::string("position ") + cell_letter(index);
  }
  return "the " + g.label_at(index);
}

inline std::string relation_phrase(int a, int b) {
  const int ac = cell_col(a), ar = cell_row(a);
  const int bc = cell_col(b), br = cell_row(b);
  if (ac == bc) return ar > br ? "behind" : "beyond";
  const std::string horizontal =
      ac < bc ? "to the left of" : "to the right of";
  if (ar == br) return horizontal;
  return horizontal + " and " + (ar > br ? "behind" : "beyond");
}

// One sentence per ordered pair of distinct cells (90 total), sorted
// lexicographically.
inline FeatureSet generate_features(const Grid& g) {
  std::vector<std::string> texts;
  texts.reserve(kGridCells * (kGridCells - 1));
  for (int a = 0; a < kGridCells; ++a) {
    for (int b = 0; b < kGridCells; ++b) {
      if (a == b) continue;
      texts.push_back(cell_name(g, a) + " is " + relation_phrase(a, b) + " " +
                      cell_name(g, b) + ".");
    }
  }
  std::sort(texts.begin(), texts.end());
  return FeatureSet(std::move(texts));
}

// ---------------------------------------------------------------------------
// Actions

// Cross product {objects} x {empty cells}, objects and destinations both in
// letter order.
inline std::vector<MoveAction> admissible_actions(const Grid& g) {
  const std::vector<int> empties = g.empty_cells();
  if (empties.empty()) throw ValidationError("no empty cell on the grid");
  std::vector<MoveAction> out;
  for (int obj : g.object_cells()) {
    for (int dest : empties) {
      out.push_back(MoveAction{g.label_at(obj), cell_letter(dest)});
    }
  }
  return out;
}

inline Grid apply(const Grid& g, const MoveAction& a) {
  const auto from = g.find(a.object);
  if (!from) {
    throw ValidationError("inadmissible action: object '" + a.object +
                          "' is not on the grid");
  }
  const int dest = letter_cell(a.destination);
  if (!g.is_empty(dest)) {
    throw ValidationError(std::string("inadmissible action: position ") +
                          a.destination + " is not empty");
  }
  Grid out = g;
  out.cells_[static_cast<std::size_t>(dest)] = out.cells_[static_cast<std::size_t>(*from)];
  out.cells_[static_cast<std::size_t>(*from)].clear();
  return out;
}

inline std::vector<int> target_cells(const Grid& g,
                                     const ArrangementTask& t) {
  std::vector<int> cells;
  cells.reserve(t.targets.size());
  for (const std::string& name : t.targets) {
    const auto cell = g.find(name);
    if (!cell) throw ValidationError("missing target '" + name + "'");
    cells.push_back(*cell);
  }
  return cells;
}

inline bool is_success(const Grid& g, const ArrangementTask& t) {
  const std::vector<int> cells = target_cells(g, t);
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cell_col(cells[i - 1]) >= cell_col(cells[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Scene sampling

struct Scene {
  Grid grid;
  ArrangementTask task;
};

struct Vocabulary {
  std::vector<std::string> train;
  std::vector<std::string> test;

  static Vocabulary defaults() {
    return Vocabulary{
        {"ball", "soda", "doughnut", "toothpaste", "bottle", "orange",
         "apple", "water bottle", "banana"},
        {"mug", "stapler", "notebook", "scissors", "sponge", "flashlight",
         "hammer", "pencil", "eraser"}};
  }
};

inline void to_json(json& j, const Vocabulary& v) {
  j = json{{"train", v.train}, {"test", v.test}};
}

inline void from_json(const json& j, Vocabulary& v) {
  req(j, "train").get_to(v.train);
  req(j, "test").get_to(v.test);
  for (const auto& n : v.train) validate_object_label(n);
  for (const auto& n : v.test) validate_object_label(n);
}

// Objects placed uniformly without replacement; target order is the uniform
// draw order; resamples placements until the start state is not already
// solved.
inline Scene sample_scene(Rng& rng, int n_targets, int n_distractors,
                          const std::vector<std::string>& names,
                          int budget = 10) {
  if (n_targets < 2 || n_targets > 4) {
    throw ValidationError("n_targets must be in 2..4");
  }
  if (n_distractors < 0) throw ValidationError("n_distractors must be >= 0");
  const int total = n_targets + n_distractors;
  if (total > kGridCells - 1) {
    throw ValidationError("capacity: " + std::to_string(total) +
                          " objects would leave no empty cell");
  }
  if (static_cast<int>(names.size()) < total) {
    throw ValidationError("vocabulary too small for scene");
  }

  std::vector<std::string> chosen;
  chosen.reserve(static_cast<std::size_t>(total));
  for (int idx : sample_indices(rng, static_cast<int>(names.size()), total)) {
    chosen.push_back(names[static_cast<std::size_t>(idx)]);
  }
  ArrangementTask task{{chosen.begin(), chosen.begin() + n_targets}, budget};
  validate_arrangement_task(task);

  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::array<std::string, kGridCells> cells{};
    const std::vector<int> spots = sample_indices(rng, kGridCells, total);
    for (int i = 0; i < total; ++i) {
      cells[static_cast<std::size_t>(spots[static_cast<std::size_t>(i)])] =
          chosen[static_cast<std::size_t>(i)];
    }
    Grid g = Grid::from_cells(std::move(cells));
    if (!is_success(g, task)) return Scene{std::move(g), std::move(task)};
  }
  throw Error("sample_scene failed to find an unsolved placement");
}

// ---------------------------------------------------------------------------
// Expert policy
//
// Plans over target-only moves (distractors stay put). The potential is the
// exact number of moves to reach a solved ordering, computed by BFS over
// placements of the targets on non-distractor cells; every expert move lowers
// it by one.

namespace detail {

struct TargetPlan {
  std::vector<int> avail;   // cells usable by targets, letter order
  std::vector<int> start;   // avail-position of each target
  std::vector<int> dist;    // distance to goal per encoded state, -1 if none
  int m = 0;

  int encode(const std::vector<int>& state) const {
    int code = 0;
    for (std::size_t i = state.size(); i-- > 0;) {
      code = code * m + state[i];
    }
    return code;
  }
};

inline TargetPlan build_target_plan(const Grid& g, const ArrangementTask& t) {
  TargetPlan plan;
  const std::vector<int> tcells = target_cells(g, t);
  for (int i = 0; i < kGridCells; ++i) {
    const bool is_target =
        std::find(tcells.begin(), tcells.end(), i) != tcells.end();
    if (g.is_empty(i) || is_target) plan.avail.push_back(i);
  }
  plan.m = static_cast<int>(plan.avail.size());
  const int k = static_cast<int>(tcells.size());
  for (int cell : tcells) {
    const auto it = std::find(plan.avail.begin(), plan.avail.end(), cell);
    plan.start.push_back(static_cast<int>(it - plan.avail.begin()));
  }

  int codes = 1;
  for (int i = 0; i < k; ++i) codes *= plan.m;
  plan.dist.assign(static_cast<std::size_t>(codes), -1);

  // Seed the BFS with every solved placement, then expand backwards; a move
  // (teleport a target to an empty cell) is its own reverse.
  std::deque<std::vector<int>> queue;
  std::vector<int> state(static_cast<std::size_t>(k), 0);
  for (;;) {
    bool distinct = true;
    for (int i = 0; i < k && distinct; ++i) {
      for (int j = i + 1; j < k; ++j) {
        if (state[static_cast<std::size_t>(i)] == state[static_cast<std::size_t>(j)]) {
          distinct = false;
          break;
        }
      }
    }
    if (distinct) {
      bool solved = true;
      for (int i = 1; i < k; ++i) {
        if (cell_col(plan.avail[static_cast<std::size_t>(state[static_cast<std::size_t>(i - 1)])]) >=
            cell_col(plan.avail[static_cast<std::size_t>(state[static_cast<std::size_t>(i)])])) {
          solved = false;
          break;
        }
      }
      if (solved) {
        plan.dist[static_cast<std::size_t>(plan.encode(state))] = 0;
        queue.push_back(state);
      }
    }
    int i = 0;
    while (i < k && ++state[static_cast<std::size_t>(i)] == plan.m) {
      state[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == k) break;
  }

  while (!queue.empty()) {
    const std::vector<int> cur = queue.front();
    queue.pop_front();
    const int d = plan.dist[static_cast<std::size_t>(plan.encode(cur))];
    for (int i = 0; i < k; ++i) {
      for (int c = 0; c < plan.m; ++c) {
        if (std::find(cur.begin(), cur.end(), c) != cur.end()) continue;
        std::vector<int> next = cur;
        next[static_cast<std::size_t>(i)] = c;
        int& slot = plan.dist[static_cast<std::size_t>(plan.encode(next))];
        if (slot == -1) {
          slot = d + 1;
          queue.push_back(next);
        }
      }
    }
  }
  return plan;
}

}  // namespace detail

// Moves needed to solve the task when only targets may move; 0 when solved.
inline int plan_distance(const Grid& g, const ArrangementTask& t) {
  const detail::TargetPlan plan = detail::build_target_plan(g, t);
  return plan.dist[static_cast<std::size_t>(plan.encode(plan.start))];
}

inline MoveAction expert_policy(const Grid& g, const ArrangementTask& t) {
  if (is_success(g, t)) {
    throw ValidationError("expert_policy: task is already solved");
  }
  if (g.empty_cells().empty()) {
    throw ValidationError("expert_policy: no empty cell on the grid");
  }
  const detail::TargetPlan plan = detail::build_target_plan(g, t);
  const int d = plan.dist[static_cast<std::size_t>(plan.encode(plan.start))];
  if (d < 0) {
    throw Error("expert_policy stuck: no target-only move sequence solves '" +
                join_names(t.targets, ",") + "'");
  }
  // First improving move in (task target order, destination letter) order.
  const int k = static_cast<int>(plan.start.size());
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < plan.m; ++c) {
      if (std::find(plan.start.begin(), plan.start.end(), c) !=
          plan.start.end()) {
        continue;
      }
      std::vector<int> next = plan.start;
      next[static_cast<std::size_t>(i)] = c;
      if (plan.dist[static_cast<std::size_t>(plan.encode(next))] == d - 1) {
        return MoveAction{t.targets[static_cast<std::size_t>(i)],
                          cell_letter(plan.avail[static_cast<std::size_t>(c)])};
      }
    }
  }
  throw Error("expert_policy: internal search inconsistency");
}

}  // namespace terse
