#ifndef GUANZERO_FEATURES_H_
#define GUANZERO_FEATURES_H_

#include <array>
#include <span>
#include <vector>

#include "guanzero/behavior.h"
#include "guanzero/engine.h"

namespace guanzero {

inline constexpr int kCardDim = 108;
inline constexpr int kHistoryActions = 20;
inline constexpr int kHistorySteps = 5;
inline constexpr int kHistoryStepDim = 4 * kCardDim;  // 432
inline constexpr int kHistoryDim = kHistorySteps * kHistoryStepDim;
inline constexpr int kActionDim = kCardDim;

// Flat state layout. Seat-relative blocks are ordered self, next, teammate,
// previous; "others" blocks drop self.
inline constexpr int kOwnHandOffset = 0;
inline constexpr int kOthersHandOffset = 108;
inline constexpr int kLastActionOffset = 216;   // 4 x 108
inline constexpr int kPlayedOffset = 648;       // 3 x 108
inline constexpr int kCountOffset = 972;        // 3 x 27
inline constexpr int kLevelOffset = 1053;       // 13
inline constexpr int kFlagOffset = 1066;        // cooperating, dwarfing, assisting (3 each)
inline constexpr int kFlatDim = 1075;
inline constexpr int kNumFlags = 9;

using CardVector = std::array<float, kCardDim>;

struct StateFeatures {
  std::array<float, kFlatDim> flat{};
  std::array<float, kHistoryDim> history{};  // timestep-major, oldest first
};

using ActionFeatures = std::array<float, kActionDim>;

CardVector encode_cards(const CardSet& cards);
void encode_cards_into(const CardSet& cards, float* out);
std::array<float, 27> encode_count(int n);  // throws std::out_of_range for n outside [0, 27]
std::array<float, 13> encode_level(Level level);
ActionFeatures encode_action(const Action& action);

// Seat `rel` steps after `seat` in play order.
inline constexpr int relative_seat(int seat, int rel) { return (seat + rel) % kNumSeats; }

// Everything but the behavior flags, which are left at zero.
void encode_state_base(const MiniGameState& state, int seat, StateFeatures& out);
void write_flags(const BehaviorFlags& flags, float* flag_block);

// Full encoding for one candidate. Computes the legal actions internally to
// decide the behavior opportunities; `with_flags` false zeroes them.
StateFeatures encode_state(const MiniGameState& state, int seat, const Action& candidate,
                           bool with_flags = true);

// Encoding of one decision point: shared state part plus per-candidate flags.
struct DecisionFeatures {
  StateFeatures base;                // flags zeroed
  std::vector<BehaviorFlags> flags;  // one per candidate, always computed
  BehaviorContext context;
  bool flags_enabled = true;         // false: the network sees a zero flag block
};

// `legal` must be legal_actions(state).
DecisionFeatures encode_decision(const MiniGameState& state, std::span<const Action> legal,
                                 bool with_flags = true);

// Positions of the set flag entries within the 9-entry flag block.
std::array<int, 3> flag_positions(const BehaviorFlags& flags);

}  // namespace guanzero

#endif  // GUANZERO_FEATURES_H_
