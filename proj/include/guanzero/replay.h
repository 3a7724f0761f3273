#ifndef GUANZERO_REPLAY_H_
#define GUANZERO_REPLAY_H_

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "guanzero/engine.h"
#include "json.hpp"

namespace guanzero {

// Replay logs are JSON lines: one "deal" header, one "action" line per
// decision, one "result" line.
inline constexpr int kReplayFormatVersion = 1;

struct ReplayLog {
  std::array<CardSet, kNumSeats> hands;
  int leader = 0;
  Level level;
  std::array<Level, 2> team_levels{};
  nlohmann::json meta = nlohmann::json::object();  // config hash, code version, agents ...
  std::vector<HistoryEntry> actions;
  std::optional<std::array<int, kNumSeats>> order;  // from the result line
};

class ReplayError : public std::runtime_error {
 public:
  ReplayError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

// `initial` is the state the mini game started from; `final_state` the same
// game after play (its history is logged).
void write_replay(std::ostream& os, const MiniGameState& initial, const MiniGameState& final_state,
                  const nlohmann::json& meta);
ReplayLog read_replay(std::istream& is);
// A file may hold several games back to back; each starts at a deal header.
std::vector<ReplayLog> read_replays(std::istream& is);

struct ReplayCheck {
  bool ok = false;
  int divergence_step = -1;  // first illegal or mismatching action
  std::string message;
  MiniGameState final_state;
};

// Re-simulates the log from its deal, verifying seat order, legality and the
// recorded result.
ReplayCheck check_replay(const ReplayLog& log);

// Rebuilds the initial state recorded in the header.
MiniGameState replay_initial_state(const ReplayLog& log);

}  // namespace guanzero

#endif  // GUANZERO_REPLAY_H_
