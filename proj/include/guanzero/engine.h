#ifndef GUANZERO_ENGINE_H_
#define GUANZERO_ENGINE_H_

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "guanzero/cards.h"
#include "guanzero/combos.h"

namespace guanzero {

// Seats 0 and 2 form team 0; seats 1 and 3 form team 1. Play order is
// increasing seat index, which is also what "clockwise" means here.
inline constexpr int team_of(int seat) { return seat % 2; }
inline constexpr int teammate_of(int seat) { return (seat + 2) % 4; }
inline constexpr int next_seat(int seat) { return (seat + 1) % 4; }

enum class Standing { kBanker = 0, kFollower, kThird, kDweller };
enum class Phase { kTribute, kPlay, kDone };

class IllegalAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HistoryEntry {
  int seat = 0;
  Action action;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct MiniGameState {
  std::array<CardSet, kNumSeats> hands;
  std::array<CardSet, kNumSeats> played;   // cards each seat has put on the table
  std::array<Level, 2> team_levels{};
  Level level;                             // level in force for this mini game
  int leader = 0;                          // seat that led the first trick
  int current = 0;
  std::optional<Combo> table;              // live combo of the current trick
  int table_owner = -1;
  int consecutive_passes = 0;
  std::vector<HistoryEntry> history;
  std::array<int, kNumSeats> last_action{-1, -1, -1, -1};  // index into history
  std::vector<int> finished_order;
  Phase phase = Phase::kPlay;

  bool leading() const { return !table.has_value(); }
  bool live(int seat) const { return !hands[seat].empty(); }
  bool done() const { return phase == Phase::kDone; }
  // 0 for the opening leader, then 1, 2, 3 in play order.
  int position_of(int seat) const { return (seat - leader + kNumSeats) % kNumSeats; }
  friend bool operator==(const MiniGameState&, const MiniGameState&) = default;
};

// Fresh mini game in the play phase; `level` is the level in force.
MiniGameState start_mini_game(const std::array<CardSet, kNumSeats>& hands, int leader, Level level,
                              std::array<Level, 2> team_levels);
MiniGameState start_mini_game(const Deal& deal, Level level = Level(Rank::kTwo));

// Leading: every lead combo. Following: every beating combo, then Pass last.
std::vector<Action> legal_actions(const MiniGameState& state);

// Validates and applies `action` for state.current. Throws IllegalAction.
void apply_in_place(MiniGameState& state, const Action& action);
MiniGameState apply(MiniGameState state, const Action& action);

// Banker, follower, third, dweller for a finished mini game.
std::array<int, kNumSeats> final_order(const MiniGameState& state);
std::array<Standing, kNumSeats> standings(const MiniGameState& state);

struct Settlement {
  int winning_team = 0;
  int upgrade = 0;  // 3, 2 or 1
};
// `order` lists at least the first three finishers.
Settlement settle(std::span<const int> order);

struct Score {
  int winner = 0;
  int loser = 0;
};
Score score(int level_diff);  // throws std::out_of_range outside [0, 14]

struct Transfer {
  int from = 0;
  int to = 0;
  CardId card = 0;
  friend bool operator==(const Transfer&, const Transfer&) = default;
};

struct TributeRecord {
  std::vector<Transfer> donations;
  std::vector<Transfer> returns;
  bool denied = false;
  int leader = 0;
  Level level;  // level in force for the coming mini game
};

// Highest single_rank_ordinal non-wild card (lowest id on ties).
CardId tribute_card(const CardSet& hand, Level level);
// Lowest-ordinal card of face rank <= 10, non-wild first, lowest id on ties.
// Falls back to the lowest card overall when no such card exists.
CardId return_card(const CardSet& hand, Level level);

// Tribute for the mini game following one that finished in `prev_order`
// (banker..dweller). Mutates `hands` with the exchanged cards.
TributeRecord tribute(std::span<const int> prev_order, std::array<CardSet, kNumSeats>& hands,
                      const std::array<Level, 2>& team_levels);

struct GameState {
  std::array<Level, 2> levels{};
  int mini_games = 0;
  std::optional<std::array<int, kNumSeats>> previous_order;
  bool over = false;
  int winner = -1;
};

// Applies the outcome of a finished mini game to the running game.
GameState advance_game(GameState game, std::span<const int> order);

}  // namespace guanzero

#endif  // GUANZERO_ENGINE_H_
