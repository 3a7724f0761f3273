#ifndef GUANZERO_CARDS_H_
#define GUANZERO_CARDS_H_

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace guanzero {

inline constexpr int kNumCards = 108;
inline constexpr int kNumSeats = 4;
inline constexpr int kHandSize = 27;
inline constexpr int kNumFaceRanks = 13;
inline constexpr int kNumRanks = 15;

// Face ranks 2..A occupy 0..12; jokers are ranks too.
enum class Rank : std::uint8_t {
  kTwo = 0, kThree, kFour, kFive, kSix, kSeven, kEight, kNine, kTen,
  kJack, kQueen, kKing, kAce, kBlackJoker, kRedJoker
};

enum class Suit : std::uint8_t { kSpades = 0, kHearts, kClubs, kDiamonds, kNone };

inline constexpr int rank_index(Rank r) { return static_cast<int>(r); }
inline constexpr int suit_index(Suit s) { return static_cast<int>(s); }
inline constexpr Rank rank_from_index(int i) { return static_cast<Rank>(i); }
inline constexpr Suit suit_from_index(int i) { return static_cast<Suit>(i); }
inline constexpr bool is_joker(Rank r) { return r == Rank::kBlackJoker || r == Rank::kRedJoker; }

// Numeric face value: 2..14 for 2..A. Jokers map to 15/16.
inline constexpr int face_value(Rank r) { return rank_index(r) + 2; }

struct Card {
  int deck = 0;  // 0 or 1
  Suit suit = Suit::kSpades;
  Rank rank = Rank::kTwo;
  friend constexpr bool operator==(const Card&, const Card&) = default;
};

using CardId = int;

// The level a mini game is played at. Always a face rank (2..A).
class Level {
 public:
  constexpr Level() = default;
  constexpr explicit Level(Rank rank) : rank_(rank) {
    if (is_joker(rank)) throw std::invalid_argument("level cannot be a joker");
  }
  constexpr Rank rank() const { return rank_; }
  friend constexpr bool operator==(Level, Level) = default;

 private:
  Rank rank_ = Rank::kTwo;
};

// Layout is 8 rows x 15 columns. Rows 0-3 are deck 0 (spades, hearts, clubs,
// diamonds), rows 4-7 deck 1. Columns 13/14 (black/red joker) exist only on
// rows 3 and 7. Ids are assigned row-major, skipping the 12 unused cells.
inline constexpr int kCardsPerDeck = 54;
inline constexpr int kLayoutRows = 8;
inline constexpr int kLayoutCols = 15;

CardId card_index(const Card& card);
Card index_card(CardId id);  // throws std::out_of_range
bool is_valid_card(const Card& card);

inline constexpr Rank card_rank(CardId id) {
  const int in_deck = id % kCardsPerDeck;
  return in_deck >= 52 ? (in_deck == 52 ? Rank::kBlackJoker : Rank::kRedJoker)
                       : rank_from_index(in_deck % kNumFaceRanks);
}
inline constexpr Suit card_suit(CardId id) {
  const int in_deck = id % kCardsPerDeck;
  return in_deck >= 52 ? Suit::kNone : suit_from_index(in_deck / kNumFaceRanks);
}
inline constexpr CardId make_card_id(int deck, Suit suit, Rank rank) {
  if (rank == Rank::kBlackJoker) return deck * kCardsPerDeck + 52;
  if (rank == Rank::kRedJoker) return deck * kCardsPerDeck + 53;
  return deck * kCardsPerDeck + suit_index(suit) * kNumFaceRanks + rank_index(rank);
}

bool is_wild(const Card& card, Level level);
inline bool is_wild_id(CardId id, Level level) {
  return card_suit(id) == Suit::kHearts && card_rank(id) == level.rank();
}

// Strict total order key for single/pair/triple/bomb comparison: faces in
// face order, the level rank lifted above A, then black joker, then red joker.
int single_rank_ordinal(Rank rank, Level level);

std::string rank_name(Rank r);
std::string suit_name(Suit s);
std::string card_name(CardId id);  // e.g. "5H", "10S", "BJ", "RJ" (deck copy suffix ' for deck 1)

// A set of physical cards as a 108-bit mask.
class CardSet {
 public:
  constexpr CardSet() = default;
  static CardSet from_ids(std::span<const CardId> ids) {
    CardSet s;
    for (CardId id : ids) s.insert(id);
    return s;
  }
  static CardSet full_deck() {
    CardSet s;
    s.lo_ = ~std::uint64_t{0};
    s.hi_ = (std::uint64_t{1} << (kNumCards - 64)) - 1;
    return s;
  }

  constexpr bool contains(CardId id) const {
    return id < 64 ? (lo_ >> id) & 1 : (hi_ >> (id - 64)) & 1;
  }
  constexpr void insert(CardId id) {
    if (id < 64) lo_ |= std::uint64_t{1} << id;
    else hi_ |= std::uint64_t{1} << (id - 64);
  }
  constexpr void erase(CardId id) {
    if (id < 64) lo_ &= ~(std::uint64_t{1} << id);
    else hi_ &= ~(std::uint64_t{1} << (id - 64));
  }
  constexpr int size() const { return std::popcount(lo_) + std::popcount(hi_); }
  constexpr bool empty() const { return (lo_ | hi_) == 0; }
  constexpr bool subset_of(const CardSet& o) const {
    return (lo_ & ~o.lo_) == 0 && (hi_ & ~o.hi_) == 0;
  }
  constexpr bool intersects(const CardSet& o) const {
    return (lo_ & o.lo_) != 0 || (hi_ & o.hi_) != 0;
  }

  constexpr CardSet operator|(const CardSet& o) const { return {lo_ | o.lo_, hi_ | o.hi_}; }
  constexpr CardSet operator&(const CardSet& o) const { return {lo_ & o.lo_, hi_ & o.hi_}; }
  constexpr CardSet operator-(const CardSet& o) const { return {lo_ & ~o.lo_, hi_ & ~o.hi_}; }
  constexpr CardSet& operator|=(const CardSet& o) { lo_ |= o.lo_; hi_ |= o.hi_; return *this; }
  constexpr CardSet& operator-=(const CardSet& o) { lo_ &= ~o.lo_; hi_ &= ~o.hi_; return *this; }

  template <typename F>
  constexpr void for_each(F&& f) const {
    for (std::uint64_t w = lo_; w != 0; w &= w - 1) f(std::countr_zero(w));
    for (std::uint64_t w = hi_; w != 0; w &= w - 1) f(64 + std::countr_zero(w));
  }
  std::vector<CardId> ids() const {
    std::vector<CardId> out;
    out.reserve(size());
    for_each([&](CardId id) { out.push_back(id); });
    return out;
  }

  constexpr std::uint64_t low_word() const { return lo_; }
  constexpr std::uint64_t high_word() const { return hi_; }

  friend constexpr bool operator==(const CardSet&, const CardSet&) = default;
  // Lexicographic over the 108-entry indicator vector (index 0 first).
  friend std::strong_ordering operator<=>(const CardSet& a, const CardSet& b);

 private:
  constexpr CardSet(std::uint64_t lo, std::uint64_t hi) : lo_(lo), hi_(hi) {}
  std::uint64_t lo_ = 0;
  std::uint64_t hi_ = 0;
};

std::string to_string(const CardSet& cards);

struct Deal {
  std::array<CardSet, kNumSeats> hands;
  int leader = 0;
  friend bool operator==(const Deal&, const Deal&) = default;
};

// Portable generator wrapper. std::uniform_int_distribution is
// implementation-defined, so bounded draws are done here to keep decks and
// episodes byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, bound). bound > 0.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform real in [0, 1).
  double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and tags (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Fisher-Yates permutation of 0..107.
std::array<CardId, kNumCards> shuffled_deck(Rng& rng);
Deal deal_from_permutation(std::span<const CardId> permutation, int leader);
Deal deal(std::uint64_t seed);

}  // namespace guanzero

#endif  // GUANZERO_CARDS_H_
