#ifndef GUANZERO_BEHAVIOR_H_
#define GUANZERO_BEHAVIOR_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "guanzero/engine.h"

namespace guanzero {

enum class Behavior { kCooperating = 0, kDwarfing, kAssisting };
inline constexpr int kNumBehaviors = 3;
std::string_view behavior_name(Behavior b);

// One-hot status: [1,0,0] cannot, [0,1,0] chooses to, [0,0,1] refuses to.
enum class BehaviorStatus : std::uint8_t { kCannot = 0, kChooses = 1, kRefuses = 2 };

inline std::array<float, 3> one_hot(BehaviorStatus s) {
  std::array<float, 3> v{};
  v[static_cast<int>(s)] = 1.0f;
  return v;
}

// Cooperating: the seat is following, the teammate's combo is among the two
// most recent actions, every action after it is an opponent's pass, and the
// seat holds a combo that beats it.
bool cooperation_opportunity(const MiniGameState& state, int seat);
// Dwarfing: the seat leads and can play a combo larger than the smallest
// live opponent hand.
bool dwarfing_opportunity(const MiniGameState& state, int seat, std::span<const Action> legal);
// Assisting: the seat leads and can play a combo smaller than the live
// teammate's hand that is not top-ranked for its type and size.
bool assisting_opportunity(const MiniGameState& state, int seat, std::span<const Action> legal);

// Candidate-independent part of the three behaviors at one decision point.
struct BehaviorContext {
  bool cooperation = false;
  bool dwarfing = false;
  bool assisting = false;
  int min_opponent_hand = 0;
  int teammate_hand = 0;
  Level level;
};

// `legal` must be legal_actions(state) for the seat to act.
BehaviorContext behavior_context(const MiniGameState& state, std::span<const Action> legal);

struct BehaviorFlags {
  BehaviorStatus cooperating = BehaviorStatus::kCannot;
  BehaviorStatus dwarfing = BehaviorStatus::kCannot;
  BehaviorStatus assisting = BehaviorStatus::kCannot;
  BehaviorStatus operator[](Behavior b) const {
    return b == Behavior::kCooperating ? cooperating : b == Behavior::kDwarfing ? dwarfing : assisting;
  }
  friend bool operator==(const BehaviorFlags&, const BehaviorFlags&) = default;
};

BehaviorFlags behavior_flags(const BehaviorContext& ctx, const Action& candidate);

BehaviorStatus cooperation_status(const MiniGameState& state, int seat, const Action& candidate);
BehaviorStatus dwarfing_status(const MiniGameState& state, int seat, const Action& candidate);
BehaviorStatus assisting_status(const MiniGameState& state, int seat, const Action& candidate);

struct BehaviorCounter {
  std::int64_t opportunities = 0;
  std::int64_t executions = 0;
};

class BehaviorCounters {
 public:
  // Counts one decision: opportunities from the context, executions from the
  // flags of the action actually chosen.
  void record(const BehaviorFlags& chosen);
  void merge(const BehaviorCounters& other);
  const BehaviorCounter& operator[](Behavior b) const { return counters_[static_cast<int>(b)]; }
  BehaviorCounter& operator[](Behavior b) { return counters_[static_cast<int>(b)]; }

 private:
  std::array<BehaviorCounter, kNumBehaviors> counters_{};
};

// executions / opportunities; throws std::domain_error without opportunities.
double rate(const BehaviorCounter& counter);
std::optional<double> try_rate(const BehaviorCounter& counter);

}  // namespace guanzero

#endif  // GUANZERO_BEHAVIOR_H_
