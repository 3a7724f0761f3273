#include "guanzero/behavior.h"

#include <algorithm>
#include <climits>
#include <stdexcept>

namespace guanzero {

namespace {

int min_live_opponent_hand(const MiniGameState& s, int seat) {
  int best = INT_MAX;
  for (int p = 0; p < kNumSeats; ++p) {
    if (team_of(p) != team_of(seat) && s.live(p)) best = std::min(best, s.hands[p].size());
  }
  return best == INT_MAX ? 0 : best;
}

int live_teammate_hand(const MiniGameState& s, int seat) { return s.hands[teammate_of(seat)].size(); }

bool dwarfs(const Action& a, int min_opponent_hand) {
  return !a.is_pass() && min_opponent_hand > 0 && a.combo->size() > min_opponent_hand;
}

bool assists(const Action& a, int teammate_hand, Level level) {
  return !a.is_pass() && a.combo->size() < teammate_hand && !is_top_ranked(*a.combo, level);
}

}  // namespace

std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::kCooperating: return "cooperating";
    case Behavior::kDwarfing: return "dwarfing";
    case Behavior::kAssisting: return "assisting";
  }
  return "";
}

bool cooperation_opportunity(const MiniGameState& state, int seat) {
  if (state.leading() || state.table_owner != teammate_of(seat)) return false;
  const auto& h = state.history;
  const int n = static_cast<int>(h.size());
  bool recent = false;
  for (int i = n - 1; i >= std::max(0, n - 2); --i) {
    if (h[i].seat == teammate_of(seat) && !h[i].action.is_pass()) {
      recent = true;
      for (int j = i + 1; j < n; ++j) {
        recent = recent && h[j].action.is_pass() && team_of(h[j].seat) != team_of(seat);
      }
      break;
    }
  }
  return recent && has_follow(state.hands[seat], *state.table, state.level);
}

bool dwarfing_opportunity(const MiniGameState& state, int seat, std::span<const Action> legal) {
  if (!state.leading()) return false;
  const int min_opp = min_live_opponent_hand(state, seat);
  return std::any_of(legal.begin(), legal.end(), [&](const Action& a) { return dwarfs(a, min_opp); });
}

bool assisting_opportunity(const MiniGameState& state, int seat, std::span<const Action> legal) {
  if (!state.leading()) return false;
  const int mate = live_teammate_hand(state, seat);
  return std::any_of(legal.begin(), legal.end(),
                     [&](const Action& a) { return assists(a, mate, state.level); });
}

BehaviorContext behavior_context(const MiniGameState& state, std::span<const Action> legal) {
  const int seat = state.current;
  BehaviorContext ctx;
  ctx.level = state.level;
  ctx.min_opponent_hand = min_live_opponent_hand(state, seat);
  ctx.teammate_hand = live_teammate_hand(state, seat);
  if (state.leading()) {
    ctx.dwarfing = dwarfing_opportunity(state, seat, legal);
    ctx.assisting = assisting_opportunity(state, seat, legal);
  } else if (state.table_owner == teammate_of(seat)) {
    // Every legal action but the trailing pass beats the table.
    const bool can_beat = legal.size() > 1;
    ctx.cooperation = can_beat && cooperation_opportunity(state, seat);
  }
  return ctx;
}

BehaviorFlags behavior_flags(const BehaviorContext& ctx, const Action& candidate) {
  auto status = [](bool opportunity, bool chooses) {
    if (!opportunity) return BehaviorStatus::kCannot;
    return chooses ? BehaviorStatus::kChooses : BehaviorStatus::kRefuses;
  };
  BehaviorFlags f;
  f.cooperating = status(ctx.cooperation, candidate.is_pass());
  f.dwarfing = status(ctx.dwarfing, dwarfs(candidate, ctx.min_opponent_hand));
  f.assisting = status(ctx.assisting, assists(candidate, ctx.teammate_hand, ctx.level));
  return f;
}

BehaviorStatus cooperation_status(const MiniGameState& state, int seat, const Action& candidate) {
  if (!cooperation_opportunity(state, seat)) return BehaviorStatus::kCannot;
  return candidate.is_pass() ? BehaviorStatus::kChooses : BehaviorStatus::kRefuses;
}

BehaviorStatus dwarfing_status(const MiniGameState& state, int seat, const Action& candidate) {
  if (!state.leading()) return BehaviorStatus::kCannot;
  const auto legal = legal_leads(state.hands[seat], state.level);
  const int min_opp = min_live_opponent_hand(state, seat);
  const bool opp = std::any_of(legal.begin(), legal.end(),
                               [&](const Combo& c) { return min_opp > 0 && c.size() > min_opp; });
  if (!opp) return BehaviorStatus::kCannot;
  return dwarfs(candidate, min_opp) ? BehaviorStatus::kChooses : BehaviorStatus::kRefuses;
}

BehaviorStatus assisting_status(const MiniGameState& state, int seat, const Action& candidate) {
  if (!state.leading()) return BehaviorStatus::kCannot;
  const auto legal = legal_leads(state.hands[seat], state.level);
  const int mate = live_teammate_hand(state, seat);
  const bool opp = std::any_of(legal.begin(), legal.end(), [&](const Combo& c) {
    return c.size() < mate && !is_top_ranked(c, state.level);
  });
  if (!opp) return BehaviorStatus::kCannot;
  return assists(candidate, mate, state.level) ? BehaviorStatus::kChooses : BehaviorStatus::kRefuses;
}

void BehaviorCounters::record(const BehaviorFlags& chosen) {
  for (int b = 0; b < kNumBehaviors; ++b) {
    const BehaviorStatus s = chosen[static_cast<Behavior>(b)];
    if (s == BehaviorStatus::kCannot) continue;
    ++counters_[b].opportunities;
    if (s == BehaviorStatus::kChooses) ++counters_[b].executions;
  }
}

void BehaviorCounters::merge(const BehaviorCounters& other) {
  for (int b = 0; b < kNumBehaviors; ++b) {
    counters_[b].opportunities += other.counters_[b].opportunities;
    counters_[b].executions += other.counters_[b].executions;
  }
}

double rate(const BehaviorCounter& counter) {
  if (counter.opportunities <= 0) throw std::domain_error("rate undefined without opportunities");
  return static_cast<double>(counter.executions) / static_cast<double>(counter.opportunities);
}

std::optional<double> try_rate(const BehaviorCounter& counter) {
  if (counter.opportunities <= 0) return std::nullopt;
  return rate(counter);
}

}  // namespace guanzero
