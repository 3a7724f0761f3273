#ifndef GUANZERO_COMBOS_H_
#define GUANZERO_COMBOS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guanzero/cards.h"

namespace guanzero {

enum class ComboType : std::uint8_t {
  kSingle = 0,
  kPair,
  kTriple,
  kPlate,      // two consecutive triples
  kTube,       // three consecutive pairs
  kFullHouse,  // triple + pair of a different rank
  kStraight,
  kBomb,       // 4..10 cards of one rank
  kStraightFlush,
  kJokerBomb,
};
inline constexpr int kNumComboTypes = 10;

std::string_view combo_type_name(ComboType type);
std::optional<ComboType> parse_combo_type(std::string_view name);

inline constexpr bool is_bomb_type(ComboType t) {
  return t == ComboType::kBomb || t == ComboType::kStraightFlush || t == ComboType::kJokerBomb;
}

// Which (suit, rank) a wild card stands for inside a combo.
struct WildTarget {
  CardId wild = 0;
  Suit suit = Suit::kSpades;
  Rank rank = Rank::kTwo;
  friend bool operator==(const WildTarget&, const WildTarget&) = default;
};

// Declared rank keys:
//   Single, Pair, Triple, FullHouse (by its triple), Bomb: single_rank_ordinal.
//   Straight, StraightFlush, Tube, Plate: face value of the lowest card
//   (2..14), with the ace-low sequence declared as 1. Level cards count at
//   face value here.
//   JokerBomb: 0.
struct Combo {
  ComboType type = ComboType::kSingle;
  int rank = 0;
  CardSet cards;
  std::array<WildTarget, 2> wild_targets{};
  std::uint8_t num_wild_targets = 0;

  int size() const { return cards.size(); }
  // Identity of an action: wild targets are not part of it.
  friend bool operator==(const Combo& a, const Combo& b) {
    return a.type == b.type && a.rank == b.rank && a.cards == b.cards;
  }
};

// Position on the bomb ladder; -1 for non-bombs.
// Bomb(4) < Bomb(5) < StraightFlush < Bomb(6) < ... < Bomb(10) < JokerBomb.
int bomb_tier(const Combo& c);

// True iff `a` may legally be played over `b`. Declared ranks already carry
// the level lift, so no level is needed here.
bool beats(const Combo& a, const Combo& b);

// Highest declared rank any (type, size) combination can have in a full
// double deck at this level. Used to decide "top-ranked" combos.
int max_rank_key(ComboType type, int size, Level level);
inline bool is_top_ranked(const Combo& c, Level level) {
  return c.rank >= max_rank_key(c.type, c.size(), level);
}

// Every distinct interpretation (type, declared rank) of exactly these cards.
std::vector<Combo> classify(const CardSet& cards, Level level);

// All distinct combos formable from `hand`, sorted by (type, rank, cards).
std::vector<Combo> legal_leads(const CardSet& hand, Level level);

// All distinct combos formable from `hand` that beat `last`, same order.
std::vector<Combo> legal_follows(const CardSet& hand, const Combo& last, Level level);

// True iff `hand` holds at least one combo that beats `last`. Cheaper than
// materializing legal_follows.
bool has_follow(const CardSet& hand, const Combo& last, Level level);

// Deterministic total order used for sorting generated moves.
bool combo_less(const Combo& a, const Combo& b);

std::string to_string(const Combo& c);

// A move: either pass or a combo.
struct Action {
  std::optional<Combo> combo;

  static Action pass() { return Action{}; }
  static Action play(Combo c) { return Action{std::move(c)}; }
  bool is_pass() const { return !combo.has_value(); }
  CardSet cards() const { return combo ? combo->cards : CardSet{}; }
  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

}  // namespace guanzero

#endif  // GUANZERO_COMBOS_H_
