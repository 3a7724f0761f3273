#include "guanzero/features.h"

#include <stdexcept>
#include <string>

namespace guanzero {

void encode_cards_into(const CardSet& cards, float* out) {
  cards.for_each([&](CardId id) { out[id] = 1.0f; });
}

CardVector encode_cards(const CardSet& cards) {
  CardVector v{};
  encode_cards_into(cards, v.data());
  return v;
}

std::array<float, 27> encode_count(int n) {
  if (n < 0 || n > 27) throw std::out_of_range("card count out of range: " + std::to_string(n));
  std::array<float, 27> v{};
  if (n > 0) v[n - 1] = 1.0f;
  return v;
}

std::array<float, 13> encode_level(Level level) {
  std::array<float, 13> v{};
  v[rank_index(level.rank())] = 1.0f;
  return v;
}

ActionFeatures encode_action(const Action& action) {
  ActionFeatures v{};
  if (!action.is_pass()) encode_cards_into(action.combo->cards, v.data());
  return v;
}

void encode_state_base(const MiniGameState& s, int seat, StateFeatures& out) {
  out.flat.fill(0.0f);
  out.history.fill(0.0f);
  float* f = out.flat.data();

  encode_cards_into(s.hands[seat], f + kOwnHandOffset);
  CardSet others;
  for (int p = 0; p < kNumSeats; ++p) {
    if (p != seat) others |= s.hands[p];
  }
  encode_cards_into(others, f + kOthersHandOffset);

  for (int rel = 0; rel < kNumSeats; ++rel) {
    const int idx = s.last_action[relative_seat(seat, rel)];
    if (idx >= 0) {
      const Action& a = s.history[idx].action;
      if (!a.is_pass()) encode_cards_into(a.combo->cards, f + kLastActionOffset + rel * kCardDim);
    }
  }
  for (int rel = 1; rel < kNumSeats; ++rel) {
    const int p = relative_seat(seat, rel);
    encode_cards_into(s.played[p], f + kPlayedOffset + (rel - 1) * kCardDim);
    const int n = s.hands[p].size();
    if (n > 27) throw std::out_of_range("hand larger than 27 cards");
    if (n > 0) f[kCountOffset + (rel - 1) * 27 + n - 1] = 1.0f;
  }
  f[kLevelOffset + rank_index(s.level.rank())] = 1.0f;

  // Last 20 actions, oldest first, padded with empty actions at the old end.
  const int n = static_cast<int>(s.history.size());
  const int take = n < kHistoryActions ? n : kHistoryActions;
  const int pad = kHistoryActions - take;
  for (int i = 0; i < take; ++i) {
    const Action& a = s.history[n - take + i].action;
    if (!a.is_pass()) encode_cards_into(a.combo->cards, out.history.data() + (pad + i) * kCardDim);
  }
}

std::array<int, 3> flag_positions(const BehaviorFlags& flags) {
  return {static_cast<int>(flags.cooperating), 3 + static_cast<int>(flags.dwarfing),
          6 + static_cast<int>(flags.assisting)};
}

void write_flags(const BehaviorFlags& flags, float* flag_block) {
  for (int i = 0; i < kNumFlags; ++i) flag_block[i] = 0.0f;
  for (int p : flag_positions(flags)) flag_block[p] = 1.0f;
}

StateFeatures encode_state(const MiniGameState& state, int seat, const Action& candidate,
                           bool with_flags) {
  StateFeatures out;
  encode_state_base(state, seat, out);
  if (with_flags) {
    if (seat != state.current) throw std::invalid_argument("behavior flags need the seat to act");
    const auto legal = legal_actions(state);
    write_flags(behavior_flags(behavior_context(state, legal), candidate), out.flat.data() + kFlagOffset);
  }
  return out;
}

DecisionFeatures encode_decision(const MiniGameState& state, std::span<const Action> legal,
                                 bool with_flags) {
  DecisionFeatures d;
  encode_state_base(state, state.current, d.base);
  d.context = behavior_context(state, legal);
  d.flags.reserve(legal.size());
  for (const Action& a : legal) d.flags.push_back(behavior_flags(d.context, a));
  d.flags_enabled = with_flags;
  return d;
}

}  // namespace guanzero
