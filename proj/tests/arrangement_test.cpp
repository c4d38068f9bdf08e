#include "terse/arrangement.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace terse;

namespace {

// The sample scene rendered in full in the appendix of the environment docs:
// front row bottle/orange/water bottle/soda/apple, back row
// ball/toothpaste/(empty)/(empty)/doughnut.
Grid sample_grid() {
  return Grid::from_rows({"bottle", "orange", "water bottle", "soda", "apple"},
                         {"ball", "toothpaste", "", "", "doughnut"});
}

constexpr const char* kSampleSceneFeatures = R"(position E is behind the water bottle.
position E is to the left of and behind the apple.
position E is to the left of and behind the soda.
position E is to the left of position G.
position E is to the left of the doughnut.
position E is to the right of and behind the bottle.
position E is to the right of and behind the orange.
position E is to the right of the ball.
position E is to the right of the toothpaste.
position G is behind the soda.
position G is to the left of and behind the apple.
position G is to the left of the doughnut.
position G is to the right of and behind the bottle.
position G is to the right of and behind the orange.
position G is to the right of and behind the water bottle.
position G is to the right of position E.
position G is to the right of the ball.
position G is to the right of the toothpaste.
the apple is beyond the doughnut.
the apple is to the right of and beyond position E.
the apple is to the right of and beyond position G.
the apple is to the right of and beyond the ball.
the apple is to the right of and beyond the toothpaste.
the apple is to the right of the bottle.
the apple is to the right of the orange.
the apple is to the right of the soda.
the apple is to the right of the water bottle.
the ball is behind the bottle.
the ball is to the left of and behind the apple.
the ball is to the left of and behind the orange.
the ball is to the left of and behind the soda.
the ball is to the left of and behind the water bottle.
the ball is to the left of position E.
the ball is to the left of position G.
the ball is to the left of the doughnut.
the ball is to the left of the toothpaste.
the bottle is beyond the ball.
the bottle is to the left of and beyond position E.
the bottle is to the left of and beyond position G.
the bottle is to the left of and beyond the doughnut.
the bottle is to the left of and beyond the toothpaste.
the bottle is to the left of the apple.
the bottle is to the left of the orange.
the bottle is to the left of the soda.
the bottle is to the left of the water bottle.
the doughnut is behind the apple.
the doughnut is to the right of and behind the bottle.
the doughnut is to the right of and behind the orange.
the doughnut is to the right of and behind the soda.
the doughnut is to the right of and behind the water bottle.
the doughnut is to the right of position E.
the doughnut is to the right of position G.
the doughnut is to the right of the ball.
the doughnut is to the right of the toothpaste.
the orange is beyond the toothpaste.
the orange is to the left of and beyond position E.
the orange is to the left of and beyond position G.
the orange is to the left of and beyond the doughnut.
the orange is to the left of the apple.
the orange is to the left of the soda.
the orange is to the left of the water bottle.
the orange is to the right of and beyond the ball.
the orange is to the right of the bottle.
the soda is beyond position G.
the soda is to the left of and beyond the doughnut.
the soda is to the left of the apple.
the soda is to the right of and beyond position E.
the soda is to the right of and beyond the ball.
the soda is to the right of and beyond the toothpaste.
the soda is to the right of the bottle.
the soda is to the right of the orange.
the soda is to the right of the water bottle.
the toothpaste is behind the orange.
the toothpaste is to the left of and behind the apple.
the toothpaste is to the left of and behind the soda.
the toothpaste is to the left of and behind the water bottle.
the toothpaste is to the left of position E.
the toothpaste is to the left of position G.
the toothpaste is to the left of the doughnut.
the toothpaste is to the right of and behind the bottle.
the toothpaste is to the right of the ball.
the water bottle is beyond position E.
the water bottle is to the left of and beyond position G.
the water bottle is to the left of and beyond the doughnut.
the water bottle is to the left of the apple.
the water bottle is to the left of the soda.
the water bottle is to the right of and beyond the ball.
the water bottle is to the right of and beyond the toothpaste.
the water bottle is to the right of the bottle.
the water bottle is to the right of the orange.)";

std::vector<std::string> fixture_lines() {
  std::vector<std::string> out;
  std::istringstream in(kSampleSceneFeatures);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

int inversions(const Grid& g, const ArrangementTask& t) {
  const std::vector<int> cells = target_cells(g, t);
  int count = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      if (cell_col(cells[i]) >= cell_col(cells[j])) ++count;
    }
  }
  return count;
}

TEST(CellNaming, LettersRunColumnMajorBackRowFirst) {
  EXPECT_EQ(cell_letter(cell_index(0, 1)), 'A');
  EXPECT_EQ(cell_letter(cell_index(0, 0)), 'B');
  EXPECT_EQ(cell_letter(cell_index(2, 1)), 'E');
  EXPECT_EQ(cell_letter(cell_index(3, 1)), 'G');
  EXPECT_EQ(cell_letter(cell_index(4, 1)), 'I');
  EXPECT_EQ(cell_letter(cell_index(4, 0)), 'J');
  EXPECT_THROW(letter_cell('K'), ValidationError);
}

TEST(GenerateFeatures, SampleSceneMatchesTheFullListing) {
  const FeatureSet fs = generate_features(sample_grid());
  const std::vector<std::string> expected = fixture_lines();
  ASSERT_EQ(expected.size(), 90u);
  ASSERT_EQ(fs.size(), 90u);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(fs.at(static_cast<int>(i)).text, expected[i]) << "at index " << i;
  }
}

TEST(GenerateFeatures, AlwaysNinetyUniqueFeatures) {
  Rng rng(3);
  const Vocabulary vocab = Vocabulary::defaults();
  for (int trial = 0; trial < 50; ++trial) {
    const int targets = 2 + rand_below(rng, 3);
    const int objects = 7 + rand_below(rng, 3);
    const Scene scene =
        sample_scene(rng, targets, objects - targets, vocab.train);
    const FeatureSet fs = generate_features(scene.grid);
    ASSERT_EQ(fs.size(), 90u);
    std::set<std::string> texts;
    for (const Feature& f : fs.features()) texts.insert(f.text);
    EXPECT_EQ(texts.size(), 90u);
  }
}

TEST(GenerateFeatures, RowSceneContainsTheDocumentedSentences) {
  const Grid g = Grid::from_rows({"apple", "banana", "orange", "", ""},
                                 {"", "", "", "", ""});
  const FeatureSet fs = generate_features(g);
  EXPECT_TRUE(fs.find("the orange is to the right of the apple.").has_value());
  EXPECT_TRUE(fs.find("the banana is to the left of the orange.").has_value());
}

TEST(GenerateFeatures, RelationsAreAntisymmetric) {
  for (int a = 0; a < kGridCells; ++a) {
    for (int b = 0; b < kGridCells; ++b) {
      if (a == b) continue;
      const std::string ab = relation_phrase(a, b);
      const std::string ba = relation_phrase(b, a);
      auto flip = [](std::string s) {
        auto swap_words = [&s](const std::string& x, const std::string& y) {
          const auto pos = s.find(x);
          if (pos != std::string::npos) s.replace(pos, x.size(), y);
        };
        if (s.find("left") != std::string::npos) {
          swap_words("left", "right");
        } else {
          swap_words("right", "left");
        }
        if (s.find("behind") != std::string::npos) {
          swap_words("behind", "beyond");
        } else {
          swap_words("beyond", "behind");
        }
        return s;
      };
      EXPECT_EQ(ba, flip(ab)) << ab << " / " << ba;
    }
  }
}

TEST(AdmissibleActions, CountIsObjectsTimesEmpties) {
  Rng rng(5);
  const Vocabulary vocab = Vocabulary::defaults();
  {
    const Scene s = sample_scene(rng, 2, 7, vocab.train);  // 9 objects
    EXPECT_EQ(admissible_actions(s.grid).size(), 9u);
  }
  {
    const Scene s = sample_scene(rng, 3, 4, vocab.train);  // 7 objects
    EXPECT_EQ(admissible_actions(s.grid).size(), 21u);
  }
  {
    const Grid g = Grid::from_rows({"ball", "", "", "", ""},
                                   {"", "", "", "", ""});
    EXPECT_EQ(admissible_actions(g).size(), 9u);
  }
}

TEST(AdmissibleActions, FullGridIsAnError) {
  std::array<std::string, kGridCells> cells;
  for (int i = 0; i < kGridCells; ++i) {
    cells[static_cast<std::size_t>(i)] = "obj" + std::to_string(i);
  }
  const Grid g = Grid::from_cells(cells);
  EXPECT_THROW(admissible_actions(g), ValidationError);
}

TEST(Apply, MovesAnObjectAndFreesTheSourceCell) {
  const Grid g = Grid::from_rows({"ball", "", "", "", ""},
                                 {"", "", "", "", ""});
  // front-left cell is B; move the ball to J (front-right)
  const Grid moved = apply(g, MoveAction{"ball", 'J'});
  EXPECT_EQ(moved.label_at(letter_cell('J')), "ball");
  EXPECT_TRUE(moved.is_empty(letter_cell('B')));

  const Grid back = apply(moved, MoveAction{"ball", 'B'});
  EXPECT_EQ(back, g);
}

TEST(Apply, RejectsInadmissibleMoves) {
  const Grid g = Grid::from_rows({"ball", "soda", "", "", ""},
                                 {"", "", "", "", ""});
  EXPECT_THROW(apply(g, MoveAction{"ball", 'B'}), ValidationError);   // occupied
  EXPECT_THROW(apply(g, MoveAction{"ghost", 'E'}), ValidationError);  // missing
}

TEST(IsSuccess, ColumnsMustStrictlyIncrease) {
  const ArrangementTask task{{"ball", "soda", "doughnut"}, 10};
  const Grid good = Grid::from_rows({"ball", "", "soda", "", ""},
                                    {"", "", "", "", "doughnut"});
  EXPECT_TRUE(is_success(good, task));

  const Grid bad = Grid::from_rows({"soda", "", "ball", "", ""},
                                   {"", "", "", "", "doughnut"});
  EXPECT_FALSE(is_success(bad, task));

  EXPECT_THROW(
      is_success(Grid::from_rows({"ball", "", "", "", ""},
                                 {"", "", "", "", ""}),
                 task),
      ValidationError);
}

// Oracle: enumerate every placement of two targets and compare against a
// direct strict left-to-right reading of the columns.
TEST(IsSuccess, MatchesBruteForceOverAllTwoObjectPlacements) {
  const ArrangementTask task{{"a", "b"}, 10};
  for (int first = 0; first < kGridCells; ++first) {
    for (int second = 0; second < kGridCells; ++second) {
      if (first == second) continue;
      std::array<std::string, kGridCells> cells{};
      cells[static_cast<std::size_t>(first)] = "a";
      cells[static_cast<std::size_t>(second)] = "b";
      const Grid g = Grid::from_cells(cells);
      EXPECT_EQ(is_success(g, task), cell_col(first) < cell_col(second));
    }
  }
}

TEST(IsSuccess, InvariantUnderTargetRowSwaps) {
  Rng rng(9);
  const Vocabulary vocab = Vocabulary::defaults();
  int swaps = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const Scene scene = sample_scene(rng, 3, 3, vocab.train);
    for (const std::string& target : scene.task.targets) {
      const int cell = *scene.grid.find(target);
      const int other = cell_index(cell_col(cell), 1 - cell_row(cell));
      if (!scene.grid.is_empty(other)) continue;
      const Grid swapped =
          apply(scene.grid, MoveAction{target, cell_letter(other)});
      EXPECT_EQ(is_success(scene.grid, scene.task),
                is_success(swapped, scene.task));
      ++swaps;
    }
  }
  EXPECT_GT(swaps, 20);
}

TEST(SampleScene, DeterministicAndCorrectlySized) {
  const Vocabulary vocab = Vocabulary::defaults();
  Rng a(42), b(42);
  const Scene first = sample_scene(a, 3, 5, vocab.train);
  const Scene second = sample_scene(b, 3, 5, vocab.train);
  EXPECT_EQ(first.grid, second.grid);
  EXPECT_EQ(first.task.targets, second.task.targets);

  EXPECT_EQ(first.grid.object_count(), 8);
  EXPECT_EQ(first.grid.empty_cells().size(), 2u);
  EXPECT_EQ(admissible_actions(first.grid).size(), 16u);
  EXPECT_FALSE(is_success(first.grid, first.task));
}

TEST(SampleScene, CapacityError) {
  Rng rng(1);
  EXPECT_THROW(sample_scene(rng, 4, 6, Vocabulary::defaults().train),
               ValidationError);
}

TEST(ExpertPolicy, SolvedTaskIsAPreconditionViolation) {
  const ArrangementTask task{{"ball", "soda"}, 10};
  const Grid g = Grid::from_rows({"ball", "", "soda", "", ""},
                                 {"", "", "", "", ""});
  EXPECT_THROW(expert_policy(g, task), ValidationError);
}

TEST(ExpertPolicy, PicksAnInversionReducingMoveWhenOneExists) {
  // Two targets swapped, one empty strictly left of both.
  const ArrangementTask task{{"a", "b"}, 10};
  const Grid g = Grid::from_rows({"", "x1", "b", "a", "x2"},
                                 {"x3", "x4", "x5", "x6", "x7"});
  const MoveAction move = expert_policy(g, task);

  std::vector<MoveAction> reducing;
  const int before = inversions(g, task);
  for (const MoveAction& cand : admissible_actions(g)) {
    if (cand.object != "a" && cand.object != "b") continue;
    if (inversions(apply(g, cand), task) < before) reducing.push_back(cand);
  }
  ASSERT_FALSE(reducing.empty());
  EXPECT_NE(std::find(reducing.begin(), reducing.end(), move), reducing.end());
}

TEST(ExpertPolicy, MatchesTheDocumentedFirstMoveOnATableTwoStyleScene) {
  // ball misplaced to the right of soda; A (back-left) empty.
  const ArrangementTask task{{"ball", "soda", "doughnut"}, 10};
  const Grid g = Grid::from_rows({"x1", "x2", "x3", "ball", ""},
                                 {"", "x4", "soda", "x5", "doughnut"});
  const MoveAction move = expert_policy(g, task);
  EXPECT_EQ(action_text(move), "move the ball to position A.");
  EXPECT_LT(inversions(apply(g, move), task), inversions(g, task));
}

TEST(ExpertPolicy, PlanDistanceDropsByOneEachMove) {
  Rng rng(21);
  const Vocabulary vocab = Vocabulary::defaults();
  for (int trial = 0; trial < 60; ++trial) {
    const int targets = 2 + rand_below(rng, 3);
    const int objects = 7 + rand_below(rng, 3);
    Scene scene = sample_scene(rng, targets, objects - targets, vocab.train);
    Grid grid = scene.grid;
    int dist = plan_distance(grid, scene.task);
    ASSERT_GT(dist, 0);
    int moves = 0;
    while (!is_success(grid, scene.task)) {
      ASSERT_LE(++moves, scene.task.budget);
      grid = apply(grid, expert_policy(grid, scene.task));
      const int next = plan_distance(grid, scene.task);
      EXPECT_EQ(next, dist - 1);
      dist = next;
    }
    EXPECT_EQ(dist, 0);
  }
}

TEST(ExpertPolicy, EscapesTheTiedColumnTrap) {
  // a and b inverted; the only empty cell shares b's column, so the fix
  // needs a two-move shuffle through that cell.
  const ArrangementTask task{{"a", "b"}, 10};
  const Grid g = Grid::from_rows({"b", "x1", "a", "x2", "x3"},
                                 {"", "x4", "x5", "x6", "x7"});
  Grid grid = g;
  int moves = 0;
  while (!is_success(grid, task)) {
    ASSERT_LE(++moves, 10);
    grid = apply(grid, expert_policy(grid, task));
  }
  EXPECT_EQ(moves, 2);
}

TEST(Vocabulary, PoolsAreDisjoint) {
  const Vocabulary v = Vocabulary::defaults();
  for (const std::string& train : v.train) {
    EXPECT_EQ(std::find(v.test.begin(), v.test.end(), train), v.test.end());
  }
  EXPECT_GE(v.train.size(), 9u);
  EXPECT_GE(v.test.size(), 9u);
}

TEST(TaskSpecConversion, NamesTargetsInOrder) {
  const ArrangementTask task{{"ball", "soda", "doughnut"}, 10};
  const TaskSpec spec = to_task_spec(task);
  EXPECT_EQ(spec.id, "arrange:ball,soda,doughnut");
  EXPECT_EQ(spec.description,
            "arrange the objects in the order: ball, soda, doughnut");
}

}  // namespace
