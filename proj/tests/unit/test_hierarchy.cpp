#include <gtest/gtest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "lucifer/eval/trial.hpp"
#include "lucifer/hierarchy/episode.hpp"

using namespace lucifer;

namespace {

std::string fixture(const std::string& rel) { return std::string(LUCIFER_FIXTURE_DIR) + "/" + rel; }

constexpr int kDr[] = {-1, 1, 0, 0};
constexpr int kDc[] = {0, 0, 1, -1};

// Plain BFS over passable cells, written without the library's helpers.
std::vector<int> distances_to(const GridMap& m, Coord goal) {
  std::vector<int> d(static_cast<std::size_t>(m.width() * m.height()), -1);
  auto at = [&](Coord c) -> int& { return d[static_cast<std::size_t>(c.row * m.width() + c.col)]; };
  std::queue<Coord> q;
  q.push(goal);
  at(goal) = 0;
  while (!q.empty()) {
    const Coord c = q.front();
    q.pop();
    for (int k = 0; k < 4; ++k) {
      const Coord n{c.row + kDr[k], c.col + kDc[k]};
      if (n.row < 0 || n.col < 0 || n.row >= m.height() || n.col >= m.width()) continue;
      if (m.at(n).type == CellType::Obstacle || at(n) >= 0) continue;
      at(n) = at(c) + 1;
      q.push(n);
    }
  }
  return d;
}

struct OracleWorker : EpisodeHooks {
  const GridMap& map;
  explicit OracleWorker(const GridMap& m) : map(m) {}

  std::optional<std::size_t> override_action(Worker, const EnvState& s, const TaskAssignment* asg) override {
    switch (asg->task) {
      case TaskId::CollectInfo: return kCollectBase + static_cast<std::size_t>(asg->info_type);
      case TaskId::Triage: return kTriageBase + static_cast<std::size_t>(map.triage_procedure());
      case TaskId::Navigate: break;
    }
    const auto d = distances_to(map, asg->target);
    const int here = d[static_cast<std::size_t>(s.position.row * map.width() + s.position.col)];
    for (std::size_t a = 0; a < 4; ++a) {
      const Coord n{s.position.row + kDr[a], s.position.col + kDc[a]};
      if (n.row < 0 || n.col < 0 || n.row >= map.height() || n.col >= map.width()) continue;
      if (d[static_cast<std::size_t>(n.row * map.width() + n.col)] == here - 1) return a;
    }
    return std::nullopt;
  }
};

// Expected length under nearest-first visiting, computed from the map text.
std::size_t expected_oracle_length(const GridMap& m) {
  std::vector<Coord> points;
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.at({r, c}).type == CellType::InfoPoint) points.push_back({r, c});
  Coord pos = m.start();
  std::size_t total = 0;
  for (int k = 0; k < m.info_requirement(); ++k) {
    auto best = std::min_element(points.begin(), points.end(), [&](Coord a, Coord b) {
      const int da = std::abs(a.row - pos.row) + std::abs(a.col - pos.col);
      const int db = std::abs(b.row - pos.row) + std::abs(b.col - pos.col);
      return da < db;
    });
    total += static_cast<std::size_t>(distances_to(m, *best)[static_cast<std::size_t>(pos.row * m.width() + pos.col)]) + 1;
    pos = *best;
    points.erase(best);
  }
  total += static_cast<std::size_t>(distances_to(m, m.victim())[static_cast<std::size_t>(pos.row * m.width() + pos.col)]);
  return total + 1;
}

struct Harness {
  GridMap map;
  InformationSpace ispace;
  RewardConfig rewards = RewardConfig::non_sparse();
  SdeSchedule schedule;
  LearningParams params;
  StateIndexer indexer;
  AgentTables tables;
  Rng rng = make_rng(1, kExplorationStream);

  explicit Harness(GridMap m, bool hierarchical = true)
      : map(std::move(m)), ispace(InformationSpace::sar(map.info_requirement())), indexer(map),
        tables(AgentTables::make(indexer, hierarchical)) {}

  EpisodeContext ctx(EpisodeHooks& hooks, LogSink* sink = nullptr) {
    return {map, rewards, ispace, schedule, params, indexer, tables, hooks, rng, sink};
  }
};

}  // namespace

TEST(Sde, NearestFirstThenVictim) {
  auto m = load_map_file(fixture("maps/sar3.map"));
  auto isp = InformationSpace::sar(3);
  EnvState s = reset(m);
  auto a = std::get<TaskAssignment>(next_assignment(s, m, isp));
  EXPECT_EQ(a.task, TaskId::Navigate);
  // (3,2) is 5 away from the start, (1,8) is 9 and (8,3) is 11.
  EXPECT_EQ(a.target, (Coord{3, 2}));

  s.position = {3, 2};
  a = std::get<TaskAssignment>(next_assignment(s, m, isp));
  EXPECT_EQ(a.task, TaskId::CollectInfo);
  EXPECT_EQ(a.info_type, 0);

  for (auto p : m.collection_points()) s.collected.set(static_cast<std::size_t>(m.at(p).required_info_type));
  a = std::get<TaskAssignment>(next_assignment(s, m, isp));
  EXPECT_EQ(a.task, TaskId::Navigate);
  EXPECT_EQ(a.target, m.victim());
  EXPECT_EQ(a.target_index, m.collection_points().size());

  s.position = m.victim();
  EXPECT_EQ(std::get<TaskAssignment>(next_assignment(s, m, isp)).task, TaskId::Triage);
  s.rescued = true;
  EXPECT_TRUE(std::holds_alternative<MissionDone>(next_assignment(s, m, isp)));
}

TEST(Sde, RowMajorTieBreak) {
  auto m = load_map("info_requirement=1\n.a.\n.@.\n.b.\n..V\n");
  auto a = std::get<TaskAssignment>(next_assignment(reset(m), m, InformationSpace::sar(1)));
  EXPECT_EQ(a.target, (Coord{0, 1}));
}

TEST(Sde, LearnedScheduleRejected) {
  auto m = load_map_file(fixture("maps/small5.map"));
  SdeSchedule s{ScheduleMode::LearnedPolicy};
  EXPECT_THROW(next_assignment(reset(m), m, InformationSpace::sar(1), s), ConfigError);
}

TEST(Termination, Predicates) {
  EnvState s;
  s.position = {3, 3};
  EXPECT_TRUE(check_termination({TaskId::Navigate, {3, 3}, 0, 1}, s));
  s.position = {3, 2};
  EXPECT_FALSE(check_termination({TaskId::Navigate, {3, 3}, 0, 1}, s));
  EXPECT_FALSE(check_termination({TaskId::CollectInfo, {3, 2}, 0, 4}, s));
  s.collected.set(4);
  EXPECT_TRUE(check_termination({TaskId::CollectInfo, {3, 2}, 0, 4}, s));
  EXPECT_FALSE(check_termination({TaskId::Triage, {3, 2}, 1, -1}, s));
  s.rescued = true;
  EXPECT_TRUE(check_termination({TaskId::Triage, {3, 2}, 1, -1}, s));
}

TEST(StateIndex, DistinctKeysPerWorker) {
  auto m = load_map_file(fixture("maps/sar3.map"));
  StateIndexer idx(m);
  EXPECT_EQ(idx.navigate_states(), 100u * 4u);
  EXPECT_EQ(idx.collect_states(), 100u * 8u);
  EXPECT_EQ(idx.triage_states(), 100u);
  std::set<std::size_t> seen;
  for (int c = 0; c < m.cell_count(); ++c)
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
      EnvState s;
      s.position = m.coord_of(c);
      for (int b = 0; b < 3; ++b)
        if (mask & (1u << b)) s.collected.set(static_cast<std::size_t>(m.info_types()[static_cast<std::size_t>(b)]));
      const auto i = idx.collect(s);
      ASSERT_LT(i, idx.collect_states());
      ASSERT_TRUE(seen.insert(i).second);
      ASSERT_EQ(idx.position_of(Worker::CollectInfo, i), s.position);
    }
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(idx.target_of_navigate(idx.navigate({2, 5}, t)), t);
}

TEST(StateIndex, FlatCountsCollectedTypes) {
  auto m = load_map_file(fixture("maps/sar3.map"));
  StateIndexer idx(m);
  EXPECT_EQ(idx.flat_states(), 100u * 4u);
  const auto types = m.info_types();
  EnvState a, b;
  a.position = b.position = {4, 6};
  a.collected.set(static_cast<std::size_t>(types[0]));
  b.collected.set(static_cast<std::size_t>(types[2]));
  EXPECT_EQ(idx.flat(a), idx.flat(b));
  b.collected.set(static_cast<std::size_t>(types[1]));
  EXPECT_NE(idx.flat(a), idx.flat(b));
  EXPECT_EQ(idx.position_of(Worker::Flat, idx.flat(b)), b.position);
  EXPECT_EQ(idx.key(Worker::Flat, idx.flat(b)), "flat:4,6:n2");
  std::set<std::size_t> seen;
  for (int c = 0; c < m.cell_count(); ++c)
    for (int n = 0; n <= 3; ++n) {
      EnvState s;
      s.position = m.coord_of(c);
      for (int k = 0; k < n; ++k) s.collected.set(static_cast<std::size_t>(types[static_cast<std::size_t>(k)]));
      const auto i = idx.flat(s);
      ASSERT_LT(i, idx.flat_states());
      ASSERT_TRUE(seen.insert(i).second);
    }
}

class OracleEpisode : public ::testing::TestWithParam<const char*> {};

TEST_P(OracleEpisode, LengthMatchesShortestPathLegs) {
  Harness h(load_map_file(fixture(GetParam())));
  OracleWorker oracle(h.map);
  auto log = run_hierarchical_episode(h.ctx(oracle), 0, {2000, 0.0, true});
  EXPECT_TRUE(log.summary.mission_complete);
  EXPECT_FALSE(log.summary.truncated);
  EXPECT_EQ(log.summary.steps, expected_oracle_length(h.map));
  EXPECT_EQ(log.steps.size(), log.summary.steps);
}

INSTANTIATE_TEST_SUITE_P(Fixtures, OracleEpisode,
                         ::testing::Values("maps/small5.map", "maps/sar3.map", "maps/sar6.map"));

TEST(Episode, Sar6LegsSumTo54) {
  // Nearest-first legs 4 12 6 12 10 8 to the six points, then 2 to the victim.
  auto m = load_map_file(fixture("maps/sar6.map"));
  // Plus six collects and the triage step.
  EXPECT_EQ(expected_oracle_length(m), 54u + 6u + 1u);
}

TEST(Episode, StepCapFailure) {
  Harness h(load_map_file(fixture("maps/sar3.map")));
  EpisodeHooks none;
  auto log = run_hierarchical_episode(h.ctx(none), 0, {15, 1.0, true});
  EXPECT_TRUE(log.summary.truncated);
  EXPECT_FALSE(log.summary.mission_complete);
  EXPECT_EQ(log.summary.steps, 15u);
  std::vector<EpisodeSummary> eps{log.summary};
  EXPECT_EQ(compute_metrics(eps, false).msr, 0.0);
}

// Task-order safety and worker action hygiene over exploratory episodes.
TEST(Episode, LoggedActionsRespectActiveTask) {
  Harness h(load_map_file(fixture("maps/sar3.map")));
  EpisodeHooks none;
  for (std::size_t ep = 0; ep < 30; ++ep) {
    auto log = run_hierarchical_episode(h.ctx(none), ep, {400, 0.5, true});
    bool ready = false;
    for (const auto& r : log.steps) {
      ASSERT_TRUE(r.assignment.has_value());
      ASSERT_TRUE(task_actions(r.assignment->task).contains(r.action)) << action_token(r.action);
      ASSERT_EQ(r.worker, worker_for(r.assignment->task));
      if (is_triage(r.action)) {
        ASSERT_TRUE(ready);
      }
      ready = ready || h.ispace.ready(r.next_state);
    }
  }
  EXPECT_TRUE(h.tables.navigate.all_finite());
}

TEST(Episode, FlatAgentMayUseAnyAction) {
  Harness h(load_map_file(fixture("maps/sar3.map")), false);
  EpisodeHooks none;
  std::set<std::size_t> seen;
  for (std::size_t ep = 0; ep < 5; ++ep) {
    for (const auto& r : run_hierarchical_episode(h.ctx(none), ep, {400, 1.0, true}).steps) {
      EXPECT_EQ(r.worker, Worker::Flat);
      seen.insert(r.action);
    }
  }
  EXPECT_TRUE(std::any_of(seen.begin(), seen.end(), [](auto a) { return is_triage(a); }));
  EXPECT_TRUE(std::any_of(seen.begin(), seen.end(), [](auto a) { return is_nav(a); }));
}

TEST(Episode, JsonLinesRecords) {
  Harness h(load_map_file(fixture("maps/small5.map")));
  OracleWorker oracle(h.map);
  std::ostringstream os;
  JsonLinesSink sink(os);
  run_hierarchical_episode(h.ctx(oracle, &sink), 3, {100, 0.0, false});
  std::istringstream in(os.str());
  std::string line;
  std::size_t steps = 0, ends = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("episode"), 3);
    if (j.at("type") == "step") {
      ++steps;
      EXPECT_TRUE(j.contains("action"));
      EXPECT_TRUE(j.contains("reward"));
      EXPECT_TRUE(j.contains("events"));
    } else if (j.at("type") == "episode_end") {
      ++ends;
      EXPECT_EQ(j.at("mission_complete"), true);
    }
  }
  EXPECT_EQ(steps, expected_oracle_length(h.map));
  EXPECT_EQ(ends, 1u);
}

// Train with policy shaping and the scripted facilitator, then a greedy
// rollout must rescue without touching a reported hazard.
TEST(Episode, TrainedGreedyRunAvoidsHazards) {
  auto cfg = load_run_config(fixture("configs/sar3_nonsparse.json"));
  cfg.episodes = 1000;
  const auto fx = TrialFixtures::load(cfg);
  const auto variant = *parse_variant("HierQ-LLM-PS");
  Harness h(fx.map);
  h.params = cfg.learning;
  Rng fac_rng = make_rng(cfg.seed_base, kFacilitatorStream);
  ScriptedBackend fac_backend(perfect_facilitator_table(fx.map));
  Facilitator facilitator(fac_backend, *fx.facilitator_prompt, fac_rng);
  AgentHooks hooks(fx.map, h.indexer, variant, cfg.shaping, cfg.learning.gamma, &facilitator);
  hooks.schedule({gather_insights(cfg, fx), {}, "fixture"});
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep)
    run_hierarchical_episode(h.ctx(hooks), ep, {400, decay_epsilon(cfg.learning, ep), true});
  auto greedy = run_hierarchical_episode(h.ctx(hooks), cfg.episodes, {400, 0.0, false});
  EXPECT_TRUE(greedy.summary.mission_complete);
  EXPECT_EQ(greedy.summary.hazard_hits, 0u);
}
