#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "guanzero/replay.h"
#include "guanzero/trainer.h"

namespace guanzero {
namespace {

namespace fs = std::filesystem;

const NetShape kSmall{8, 16};

Snapshot small_snapshot(std::uint64_t seed) {
  Snapshot s;
  for (int p = 0; p < kNumSeats; ++p) s[p] = ValueNet<float>::init(seed + p, kSmall);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("guanzero_test_" + name);
  fs::remove_all(d);
  return d;
}

TrainerConfig small_config(const std::string& name, long long frames) {
  TrainerConfig c;
  c.shape = kSmall;
  c.frames = frames;
  c.checkpoint_interval = frames / 2;
  c.log_interval = frames / 4;
  c.wall_clock = false;
  c.out_dir = fresh_dir(name);
  c.run_id = "r";
  c.lr = 1e-3;
  c.epsilon = 0.2;
  return c;
}

// Independent return oracle: the first finisher's team wins; the size of the
// win depends on where the first finisher's partner came in.
int oracle_return(const std::array<int, 4>& order, int seat) {
  const int banker = order[0];
  const int mate = (banker + 2) % 4;
  int u = 1;
  if (order[1] == mate) u = 3;
  else if (order[2] == mate) u = 2;
  return (seat % 2 == banker % 2) ? u : -u;
}

TEST_CASE("packing matches the dense encoder") {
  Rng rng(17);
  for (int g = 0; g < 6; ++g) {
    MiniGameState s = start_mini_game(deal(rng.next()));
    while (!s.done()) {
      const auto legal = legal_actions(s);
      const std::size_t pick = rng.uniform(legal.size());
      for (bool flags : {true, false}) {
        const auto d = encode_decision(s, legal, flags);
        Transition t = pack_transition(d, pick, legal[pick]);
        t.g = -2.0f;
        Batch b;
        b.resize(2);
        unpack_transition(t, b, 1);
        const StateFeatures sf = encode_state(s, s.current, legal[pick], flags);
        const ActionFeatures af = encode_action(legal[pick]);
        for (int i = 0; i < kFlatDim; ++i) REQUIRE(b.flat[kFlatDim + i] == sf.flat[i]);
        for (int i = 0; i < kHistoryDim; ++i) REQUIRE(b.history[kHistoryDim + i] == sf.history[i]);
        for (int i = 0; i < kActionDim; ++i) REQUIRE(b.action[kActionDim + i] == af[i]);
        CHECK(b.target[1] == -2.0f);
        Transition t2 = pack_transition(sf, af);
        t2.g = -2.0f;
        CHECK(t2 == t);
        if (!flags) {
          for (int i = 0; i < kNumFlags; ++i) CHECK(b.flat[kFlatDim + kFlagOffset + i] == 0.0f);
        }
      }
      apply_in_place(s, legal[pick]);
    }
  }
}

TEST_CASE("episodes stamp the team return on every transition") {
  const Snapshot snap = small_snapshot(3);
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(seed);
    const MiniGameState init = start_mini_game(deal(seed + 500));
    const Episode ep = run_episode(snap, init, rng, seed % 2 ? 1.0 : 0.0, true);
    CHECK(ep.final_state.done());
    std::size_t total = 0;
    for (int pos = 0; pos < 4; ++pos) {
      const int seat = (init.leader + pos) % 4;
      std::size_t decisions = 0;
      for (const auto& h : ep.final_state.history) decisions += h.seat == seat ? 1 : 0;
      CHECK(ep.transitions[pos].size() == decisions);
      total += decisions;
      for (const auto& t : ep.transitions[pos]) CHECK(t.g == static_cast<float>(oracle_return(ep.order, seat)));
    }
    CHECK(total == ep.final_state.history.size());
    // Same seeds, same episode.
    Rng rng2(seed);
    const Episode again = run_episode(snap, init, rng2, seed % 2 ? 1.0 : 0.0, true);
    CHECK(again.final_state == ep.final_state);
    CHECK(again.transitions == ep.transitions);
  }
}

TEST_CASE("greedy episodes follow the position networks") {
  const Snapshot snap = small_snapshot(9);
  const MiniGameState init = start_mini_game(deal(42));
  Rng rng(1);
  const Episode ep = run_episode(snap, init, rng, 0.0, false);
  auto shared = std::make_shared<const Snapshot>(snap);
  DmcAgent agent(shared, false);
  MiniGameState s = init;
  for (const auto& h : ep.final_state.history) {
    const auto legal = legal_actions(s);
    Rng dummy(0);
    CHECK(legal[agent.choose(s, legal, dummy)] == h.action);
    apply_in_place(s, h.action);
  }
}

TEST_CASE("features regenerate from a replay log") {
  const Snapshot snap = small_snapshot(5);
  Rng rng(8);
  const Episode ep = run_episode(snap, start_mini_game(deal(8)), rng, 0.3, true);
  std::ostringstream os;
  write_replay(os, ep.initial, ep.final_state, {});
  std::istringstream is(os.str());
  const ReplayLog log = read_replay(is);
  MiniGameState s = replay_initial_state(log);
  std::array<std::vector<Transition>, 4> regen;
  for (const auto& e : log.actions) {
    const auto legal = legal_actions(s);
    const auto it = std::find(legal.begin(), legal.end(), e.action);
    REQUIRE(it != legal.end());
    const auto d = encode_decision(s, legal, true);
    Transition t = pack_transition(d, static_cast<std::size_t>(it - legal.begin()), *it);
    regen[s.position_of(s.current)].push_back(t);
    apply_in_place(s, e.action);
  }
  for (int pos = 0; pos < 4; ++pos) {
    REQUIRE(regen[pos].size() == ep.transitions[pos].size());
    for (std::size_t i = 0; i < regen[pos].size(); ++i) CHECK(regen[pos][i].bits == ep.transitions[pos][i].bits);
  }
}

TEST_CASE("position buffer is a bounded FIFO") {
  PositionBuffer buf(4);
  for (int i = 0; i < 4; ++i) {
    Transition t;
    t.g = static_cast<float>(i);
    CHECK(buf.push(t));
  }
  std::vector<Transition> out;
  CHECK_FALSE(buf.try_pop(5, out));
  std::atomic<bool> pushed{false};
  std::thread producer([&] {
    Transition t;
    t.g = 4;
    buf.push(t);
    pushed = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK_FALSE(pushed.load());  // full: producer waits
  CHECK(buf.try_pop(2, out));
  producer.join();
  CHECK(pushed.load());
  REQUIRE(out.size() == 2);
  CHECK(out[0].g == 0);
  CHECK(out[1].g == 1);
  CHECK(buf.try_pop(3, out));
  CHECK(out[0].g == 2);
  CHECK(out[2].g == 4);
  CHECK(buf.produced() == 5);
  CHECK(buf.consumed() == 5);
  CHECK(buf.size() == 0);

  PositionBuffer closing(1);
  closing.push(Transition{});
  std::thread blocked([&] { CHECK_FALSE(closing.push(Transition{})); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  closing.close();
  blocked.join();
}

TEST_CASE("snapshot readers never see a mix of versions") {
  SnapshotStore store;
  std::vector<std::array<std::uint64_t, 4>> published;
  std::mutex pub_mu;
  auto make = [&](std::uint64_t seed) {
    auto s = std::make_shared<Snapshot>(small_snapshot(seed * 10));
    std::array<std::uint64_t, 4> sums{};
    for (int p = 0; p < 4; ++p) sums[p] = (*s)[p].checksum();
    std::lock_guard lock(pub_mu);
    published.push_back(sums);
    return s;
  };
  store.publish(make(0));
  std::atomic<bool> done{false};
  std::vector<std::array<std::uint64_t, 4>> seen;
  std::thread reader([&] {
    while (!done.load()) {
      const auto s = store.get();
      std::array<std::uint64_t, 4> sums{};
      for (int p = 0; p < 4; ++p) sums[p] = (*s)[p].checksum();
      seen.push_back(sums);
    }
  });
  for (std::uint64_t v = 1; v <= 30; ++v) store.publish(make(v));
  done = true;
  reader.join();
  CHECK(store.version() == 31);
  REQUIRE_FALSE(seen.empty());
  for (const auto& s : seen) CHECK(std::find(published.begin(), published.end(), s) != published.end());
}

TEST_CASE("training smoke run writes metrics and checkpoints") {
  TrainerConfig c = small_config("smoke", 10000);
  const TrainResult r = train(c);
  CHECK(r.frames >= 10000);
  CHECK(r.frames < 10000 + c.batch_size);
  CHECK(r.episodes > 0);
  CHECK(r.checkpoints.back() == r.frames);
  const fs::path dir = c.run_dir();
  CHECK(latest_common_frames(dir) == r.frames);
  for (int p = 1; p <= 4; ++p) {
    const auto stem = "p" + std::to_string(p) + "_" + std::to_string(r.frames);
    CHECK(fs::exists(dir / (stem + ".momentum")));
    const auto side = nlohmann::json::parse(slurp(dir / (stem + ".json")));
    CHECK(side["frames"] == r.frames);
    CHECK(side["config_hash"] == hex64(config_hash(c)));
    CHECK(side["behavior_flags"] == true);
  }
  const auto snap = load_snapshot(dir, r.frames);
  for (const auto& n : *snap) CHECK(n.all_finite());
  std::istringstream metrics(slurp(dir / "metrics.jsonl"));
  int lines = 0;
  for (std::string l; std::getline(metrics, l); ++lines) {
    const auto j = nlohmann::json::parse(l);
    CHECK(j["wall_s"] == 0.0);
    CHECK(j.contains("mse"));
    CHECK(j.contains("coop_rate"));
  }
  CHECK(lines >= 16);
  const auto run = nlohmann::json::parse(slurp(dir / "run.json"));
  CHECK(run["config"]["frames"] == 10000);
  fs::remove_all(c.out_dir);
}

TEST_CASE("single-thread training is byte-for-byte reproducible") {
  TrainerConfig a = small_config("det_a", 4000);
  a.replay_interval = 7;
  TrainerConfig b = a;
  b.out_dir = fresh_dir("det_b");
  const auto ra = train(a);
  const auto rb = train(b);
  CHECK(ra.frames == rb.frames);
  CHECK(ra.episodes == rb.episodes);
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(a.run_dir())) {
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), a.run_dir()).string());
  }
  CHECK(names.size() > 10);
  for (const auto& n : names) {
    INFO(n);
    REQUIRE(fs::exists(b.run_dir() / n));
    if (n == "run.json") {
      auto ja = nlohmann::json::parse(slurp(a.run_dir() / n));
      auto jb = nlohmann::json::parse(slurp(b.run_dir() / n));
      ja["config"].erase("out_dir");
      jb["config"].erase("out_dir");
      CHECK(ja == jb);
      continue;
    }
    CHECK(slurp(a.run_dir() / n) == slurp(b.run_dir() / n));
  }
  // Logged replays re-simulate cleanly.
  int replays = 0;
  for (const auto& e : fs::directory_iterator(a.run_dir() / "replays")) {
    std::ifstream in(e.path());
    CHECK(check_replay(read_replay(in)).ok);
    ++replays;
  }
  CHECK(replays > 0);
  TrainerConfig other = a;
  other.seed = 2;
  other.out_dir = fresh_dir("det_c");
  train(other);
  CHECK(slurp(other.run_dir() / "metrics.jsonl") != slurp(a.run_dir() / "metrics.jsonl"));
  for (const auto& d : {a.out_dir, b.out_dir, other.out_dir}) fs::remove_all(d);
}

TEST_CASE("resume rules") {
  TrainerConfig c = small_config("resume", 2000);
  train(c);
  CHECK_THROWS_AS(train(c), ResumeConflict);
  TrainerConfig longer = c;
  longer.frames = 4000;
  const auto r = train(longer, true);
  CHECK(r.frames >= 4000);
  CHECK(latest_common_frames(c.run_dir()) == r.frames);
  TrainerConfig changed = longer;
  changed.frames = 6000;
  changed.lr = 0.5;
  CHECK_THROWS_AS(train(changed, true), ResumeConflict);
  TrainerConfig empty = small_config("resume_empty", 2000);
  CHECK_THROWS_AS(train(empty, true), ResumeConflict);
  fs::remove_all(c.out_dir);
  fs::remove_all(empty.out_dir);
}

TEST_CASE("threaded training reaches its budget") {
  TrainerConfig c = small_config("threaded", 3000);
  c.threaded = true;
  c.actor_count = 2;
  c.buffer_capacity = 256;
  const auto r = train(c);
  CHECK(r.frames >= 3000);
  CHECK(latest_common_frames(c.run_dir()) == r.frames);
  fs::remove_all(c.out_dir);
}

TEST_CASE("full-game episodes carry levels forward") {
  TrainerConfig c = small_config("fullgame", 0);
  c.full_game = true;
  const Snapshot snap = small_snapshot(1);
  Actor actor(c, 0);
  bool saw_raised = false;
  for (int i = 0; i < 12; ++i) {
    const Episode ep = actor.next(snap);
    if (ep.initial.level.rank() != Rank::kTwo) saw_raised = true;
  }
  CHECK(saw_raised);
}

TEST_CASE("config validation") {
  TrainerConfig c;
  CHECK_NOTHROW(c.validate());
  c.epsilon = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainerConfig{};
  c.buffer_capacity = 4;
  CHECK_THROWS(c.validate());
  c = TrainerConfig{};
  TrainerConfig d = c;
  d.frames = 1;
  d.out_dir = "/elsewhere";
  CHECK(config_hash(c) == config_hash(d));
  d.behavior_flags = false;
  CHECK(config_hash(c) != config_hash(d));
}

}  // namespace
}  // namespace guanzero
