#ifndef GUANZERO_EVALHARNESS_H_
#define GUANZERO_EVALHARNESS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "guanzero/agents.h"
#include "guanzero/behavior.h"
#include "json.hpp"

namespace guanzero {

inline constexpr int kDeckFormatVersion = 1;

struct DeckRecord {
  std::array<CardId, kNumCards> permutation{};
  int leader = 0;
  friend bool operator==(const DeckRecord&, const DeckRecord&) = default;
};

struct DeckFile {
  std::uint64_t seed = 0;
  std::vector<DeckRecord> decks;
};

class DeckFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// n seeded shuffles; every record leads from seat 0.
DeckFile make_decks(int n, std::uint64_t seed);
void write_decks(std::ostream& os, const DeckFile& f);
DeckFile read_decks(std::istream& is);  // validates every permutation
void gen_decks(int n, std::uint64_t seed, const std::filesystem::path& path);
DeckFile load_decks(const std::filesystem::path& path);
// FNV-1a of the serialized file.
std::uint64_t deck_hash(const DeckFile& f);

enum class LevelMode { kFixed, kFullGame };

struct MatchConfig {
  std::string team_a = "random";
  std::string team_b = "random";
  int n_games = 1000;
  bool swap = true;
  LevelMode level_mode = LevelMode::kFixed;
  std::uint64_t seed = 0;  // for stochastic agents
  int threads = 1;         // capped by GUANZERO_THREADS
  void validate(const DeckFile& decks) const;
};

struct GameOutcome {
  int deck = 0;
  bool swapped = false;       // team A in seats {1, 3}
  bool a_won = false;
  std::array<int, kNumSeats> standings{};
  int upgrade = 0;
  Level level;
};

struct MatchReport {
  bool valid = true;
  std::string error;
  int games_a = 0, wins_a = 0;  // unswapped seating
  int games_b = 0, wins_b = 0;  // agent A seated as team B
  std::optional<double> wr_as_team_a, wr_as_team_b;
  std::array<BehaviorCounters, 2> behavior;  // [0] agent A's seats, [1] agent B's
  std::vector<GameOutcome> games;            // unswapped then swapped, by deck
};

// Plays the match. Agent factories are built from the specs unless given.
MatchReport run_match(const MatchConfig& config, const DeckFile& decks);
MatchReport run_match(const MatchConfig& config, const DeckFile& decks, const AgentFactory& a,
                      const AgentFactory& b);
using AgentMaker = std::function<std::unique_ptr<Agent>()>;
// `serial` forces one worker (interactive or non-thread-safe agents).
MatchReport run_match(const MatchConfig& config, const DeckFile& decks, const AgentMaker& a, const AgentMaker& b,
                      bool serial = false);

nlohmann::ordered_json report_json(const MatchConfig& config, const DeckFile& decks, const MatchReport& r);

// WR of the checkpoints in `dir` against `opponent`, one CSV row per frame count.
struct CurvePoint {
  long long frames = 0;
  MatchReport report;
};
std::vector<CurvePoint> wr_curve(const std::filesystem::path& dir, const std::string& kind,
                                 const std::vector<long long>& frames, const std::string& opponent,
                                 MatchConfig base, const DeckFile& decks);
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve);

}  // namespace guanzero

#endif  // GUANZERO_EVALHARNESS_H_
