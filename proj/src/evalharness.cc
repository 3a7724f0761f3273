#include "guanzero/evalharness.h"

#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "guanzero/parallel.h"
#include "guanzero/trainer.h"
#include "guanzero/version.h"

namespace guanzero {

using nlohmann::json;
using nlohmann::ordered_json;

DeckFile make_decks(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("deck count must be positive");
  DeckFile f;
  f.seed = seed;
  f.decks.resize(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, 0xdec4, static_cast<std::uint64_t>(i)));
    f.decks[i].permutation = shuffled_deck(rng);
    f.decks[i].leader = 0;
  }
  return f;
}

void write_decks(std::ostream& os, const DeckFile& f) {
  // Header line, then one deck per line.
  ordered_json h;
  h["format"] = "guanzero-decks";
  h["version"] = kDeckFormatVersion;
  h["seed"] = f.seed;
  h["n"] = f.decks.size();
  os << h.dump() << '\n';
  for (const auto& d : f.decks) {
    ordered_json r;
    r["leader"] = d.leader;
    r["permutation"] = d.permutation;
    os << r.dump() << '\n';
  }
}

DeckFile read_decks(std::istream& is) {
  DeckFile f;
  std::string line;
  int line_no = 0;
  std::size_t expected = 0;
  try {
    if (!std::getline(is, line)) throw DeckFileError("empty deck file");
    ++line_no;
    const json h = json::parse(line);
    if (h.at("format") != "guanzero-decks") throw DeckFileError("not a deck file");
    if (h.at("version").get<int>() != kDeckFormatVersion) throw DeckFileError("unsupported deck file version");
    f.seed = h.at("seed").get<std::uint64_t>();
    expected = h.at("n").get<std::size_t>();
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json r = json::parse(line);
      DeckRecord d;
      const auto& perm = r.at("permutation");
      if (perm.size() != kNumCards) throw DeckFileError("permutation must list 108 cards");
      for (int i = 0; i < kNumCards; ++i) d.permutation[i] = perm[i].get<int>();
      d.leader = r.at("leader").get<int>();
      deal_from_permutation(d.permutation, d.leader);  // validates
      f.decks.push_back(d);
    }
  } catch (const DeckFileError& e) {
    throw DeckFileError("line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::exception& e) {
    throw DeckFileError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (f.decks.size() != expected) throw DeckFileError("deck count does not match the header");
  return f;
}

void gen_decks(int n, std::uint64_t seed, const std::filesystem::path& path) {
  const DeckFile f = make_decks(n, seed);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_decks(out, f);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DeckFile load_decks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_decks(in);
}

std::uint64_t deck_hash(const DeckFile& f) {
  std::ostringstream os;
  write_decks(os, f);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void MatchConfig::validate(const DeckFile& decks) const {
  if (n_games < 1) throw std::invalid_argument("n_games must be positive");
  if (decks.decks.size() < static_cast<std::size_t>(n_games)) {
    throw std::invalid_argument("deck file holds " + std::to_string(decks.decks.size()) + " decks, " +
                                std::to_string(n_games) + " needed");
  }
}

namespace {

struct Seating {
  std::array<std::unique_ptr<Agent>, kNumSeats> agents;
  std::array<int, kNumSeats> side{};  // 0: agent A, 1: agent B
};

Seating seat(const AgentMaker& a, const AgentMaker& b, bool swapped) {
  Seating s;
  for (int p = 0; p < kNumSeats; ++p) {
    const bool a_seat = (p % 2 == 0) != swapped;
    s.side[p] = a_seat ? 0 : 1;
    s.agents[p] = a_seat ? a() : b();
  }
  return s;
}

struct PlayResult {
  GameOutcome outcome;
  std::array<BehaviorCounters, 2> behavior;
};

PlayResult play(Seating& seating, const MiniGameState& initial, std::uint64_t seed, int deck, bool swapped) {
  PlayResult r;
  std::array<Rng, kNumSeats> rngs;
  for (int p = 0; p < kNumSeats; ++p) rngs[p] = Rng(mix_seed(seed, static_cast<std::uint64_t>(deck) * 8 + p, swapped));
  MiniGameState s = initial;
  while (!s.done()) {
    const auto legal = legal_actions(s);
    const int p = s.current;
    const std::size_t pick = seating.agents[p]->choose(s, legal, rngs[p]);
    if (pick >= legal.size()) throw std::runtime_error(seating.agents[p]->name() + " returned an invalid index");
    const BehaviorContext ctx = behavior_context(s, legal);
    r.behavior[seating.side[p]].record(behavior_flags(ctx, legal[pick]));
    apply_in_place(s, legal[pick]);
  }
  const auto order = final_order(s);
  const Settlement st = settle(order);
  r.outcome.deck = deck;
  r.outcome.swapped = swapped;
  r.outcome.standings = order;
  r.outcome.upgrade = st.upgrade;
  r.outcome.level = initial.level;
  // Seats 0 and 2 form team 0.
  r.outcome.a_won = (st.winning_team == 0) != swapped;
  return r;
}

// Fixed level mode: independent mini games at level 2.
std::vector<PlayResult> play_fixed(const MatchConfig& cfg, const DeckFile& decks, const AgentMaker& a,
                                   const AgentMaker& b, bool swapped, bool serial, std::string& error) {
  const int n = cfg.n_games;
  std::vector<std::optional<PlayResult>> slots(n);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  auto worker = [&] {
    Seating seating = seat(a, b, swapped);
    while (!failed.load()) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const Deal d = deal_from_permutation(decks.decks[i].permutation, decks.decks[i].leader);
        const MiniGameState init = start_mini_game(d.hands, d.leader, Level(Rank::kTwo), {Level(Rank::kTwo), Level(Rank::kTwo)});
        slots[i] = play(seating, init, cfg.seed, i, swapped);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (error.empty()) error = "game " + std::to_string(i) + (swapped ? " (swapped)" : "") + ": " + e.what();
        failed = true;
      }
    }
  };
  const int threads = serial ? 1 : std::min(worker_threads(cfg.threads), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<PlayResult> out;
  for (auto& s : slots) {
    if (!s) break;  // partial: stop at the first gap so results stay a prefix
    out.push_back(std::move(*s));
  }
  return out;
}

// Full-game mode: decks are consecutive mini games of running full games,
// with levels and tribute carried forward.
std::vector<PlayResult> play_full(const MatchConfig& cfg, const DeckFile& decks, const AgentMaker& a,
                                  const AgentMaker& b, bool swapped, std::string& error) {
  std::vector<PlayResult> out;
  Seating seating = seat(a, b, swapped);
  GameState game;
  game.levels = {Level(Rank::kTwo), Level(Rank::kTwo)};
  std::optional<std::array<int, kNumSeats>> prev;
  for (int i = 0; i < cfg.n_games; ++i) {
    try {
      if (game.over) {
        game = GameState{};
        game.levels = {Level(Rank::kTwo), Level(Rank::kTwo)};
        prev.reset();
      }
      const Deal d = deal_from_permutation(decks.decks[i].permutation, decks.decks[i].leader);
      MiniGameState init;
      if (!prev) {
        init = start_mini_game(d.hands, d.leader, game.levels[team_of(d.leader)], game.levels);
      } else {
        auto hands = d.hands;
        const TributeRecord rec = tribute(*prev, hands, game.levels);
        init = start_mini_game(hands, rec.leader, rec.level, game.levels);
      }
      PlayResult r = play(seating, init, cfg.seed, i, swapped);
      game = advance_game(game, r.outcome.standings);
      prev = r.outcome.standings;
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      error = "game " + std::to_string(i) + (swapped ? " (swapped)" : "") + ": " + e.what();
      break;
    }
  }
  return out;
}

}  // namespace

MatchReport run_match(const MatchConfig& config, const DeckFile& decks, const AgentFactory& a,
                      const AgentFactory& b) {
  // Interactive agents are never run concurrently.
  const bool serial = a.spec().kind == "human" || b.spec().kind == "human";
  return run_match(
      config, decks, [&] { return a.make(); }, [&] { return b.make(); }, serial);
}

MatchReport run_match(const MatchConfig& config, const DeckFile& decks, const AgentMaker& a, const AgentMaker& b,
                      bool serial) {
  config.validate(decks);
  MatchReport rep;
  for (bool swapped : {false, true}) {
    if (swapped && !config.swap) break;
    std::string error;
    const auto results = config.level_mode == LevelMode::kFixed ? play_fixed(config, decks, a, b, swapped, serial, error)
                                                                : play_full(config, decks, a, b, swapped, error);
    for (const auto& r : results) {
      rep.games.push_back(r.outcome);
      (swapped ? rep.games_b : rep.games_a) += 1;
      (swapped ? rep.wins_b : rep.wins_a) += r.outcome.a_won ? 1 : 0;
      for (int t = 0; t < 2; ++t) rep.behavior[t].merge(r.behavior[t]);
    }
    if (!error.empty()) {
      rep.valid = false;
      rep.error = error;
      break;
    }
  }
  if (rep.games_a > 0) rep.wr_as_team_a = static_cast<double>(rep.wins_a) / rep.games_a;
  if (rep.games_b > 0) rep.wr_as_team_b = static_cast<double>(rep.wins_b) / rep.games_b;
  return rep;
}

MatchReport run_match(const MatchConfig& config, const DeckFile& decks) {
  const AgentFactory a(config.team_a);
  const AgentFactory b(config.team_b);
  return run_match(config, decks, a, b);
}

namespace {

ordered_json rates_json(const BehaviorCounters& c) {
  ordered_json out;
  for (Behavior b : {Behavior::kCooperating, Behavior::kDwarfing, Behavior::kAssisting}) {
    ordered_json e;
    e["opportunities"] = c[b].opportunities;
    e["executions"] = c[b].executions;
    const auto r = try_rate(c[b]);
    e["rate"] = r ? json(*r) : json(nullptr);
    out[std::string(behavior_name(b))] = e;
  }
  return out;
}

}  // namespace

ordered_json report_json(const MatchConfig& config, const DeckFile& decks, const MatchReport& r) {
  ordered_json j;
  ordered_json c;
  c["team_a"] = config.team_a;
  c["team_b"] = config.team_b;
  c["n_games"] = config.n_games;
  c["swap"] = config.swap;
  c["level_mode"] = config.level_mode == LevelMode::kFixed ? "fixed" : "full_game";
  c["seed"] = config.seed;
  c["deck_seed"] = decks.seed;
  c["deck_hash"] = hex64(deck_hash(decks));
  j["config"] = c;
  j["code_version"] = kCodeVersion;
  j["valid"] = r.valid;
  if (!r.valid) j["error"] = r.error;
  j["wr_as_team_a"] = r.wr_as_team_a ? json(*r.wr_as_team_a) : json(nullptr);
  j["wr_as_team_b"] = r.wr_as_team_b ? json(*r.wr_as_team_b) : json(nullptr);
  j["games_as_team_a"] = r.games_a;
  j["games_as_team_b"] = r.games_b;
  ordered_json rates;
  rates["team_a"] = rates_json(r.behavior[0]);
  rates["team_b"] = rates_json(r.behavior[1]);
  j["rates"] = rates;
  ordered_json games = ordered_json::array();
  for (const auto& g : r.games) {
    ordered_json e;
    e["deck"] = g.deck;
    e["seating"] = g.swapped ? "swapped" : "normal";
    e["winner"] = g.a_won ? "A" : "B";
    e["standings"] = g.standings;
    e["upgrade"] = g.upgrade;
    e["level"] = rank_name(g.level.rank());
    games.push_back(e);
  }
  j["per_game"] = games;
  return j;
}

std::vector<CurvePoint> wr_curve(const std::filesystem::path& dir, const std::string& kind,
                                 const std::vector<long long>& frames, const std::string& opponent,
                                 MatchConfig base, const DeckFile& decks) {
  std::vector<CurvePoint> out;
  const AgentFactory opp(opponent);
  for (long long f : frames) {
    base.team_a = kind + ":" + dir.string() + "@" + std::to_string(f);
    base.team_b = opponent;
    const AgentFactory a(base.team_a);
    out.push_back({f, run_match(base, decks, a, opp)});
  }
  return out;
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << "frames,wr_as_team_a,wr_as_team_b,coop_rate,dwarf_rate,assist_rate\n";
  auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& p : curve) {
    const auto& c = p.report.behavior[0];
    os << p.frames << ',' << cell(p.report.wr_as_team_a) << ',' << cell(p.report.wr_as_team_b) << ','
       << cell(try_rate(c[Behavior::kCooperating])) << ',' << cell(try_rate(c[Behavior::kDwarfing])) << ','
       << cell(try_rate(c[Behavior::kAssisting])) << '\n';
  }
}

}  // namespace guanzero
