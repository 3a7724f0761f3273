#include "guanzero/combos.h"

#include <algorithm>
#include <climits>
#include <unordered_set>

namespace guanzero {

namespace {

constexpr std::array<std::string_view, kNumComboTypes> kTypeNames = {
    "single", "pair", "triple", "plate", "tube", "full_house",
    "straight", "bomb", "straight_flush", "joker_bomb"};

// Rank index of position `i` of a sequence starting at `start`; start -1 is
// the ace-low sequence.
constexpr int sequence_rank(int start, int i) { return start + i < 0 ? 12 : start + i; }
constexpr int sequence_key(int start) { return start < 0 ? 1 : start + 2; }

struct ComboKey {
  std::uint64_t lo, hi;
  int type, rank;
  friend bool operator==(const ComboKey&, const ComboKey&) = default;
};
struct ComboKeyHash {
  std::size_t operator()(const ComboKey& k) const {
    std::uint64_t h = k.lo * 0x9e3779b97f4a7c15ULL;
    h ^= (k.hi + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2));
    h ^= static_cast<std::uint64_t>(k.type * 64 + k.rank) * 0xff51afd7ed558ccdULL;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// Which combos to emit: a combo of `type` is emitted iff its rank exceeds
// `min_rank[type]` (bombs are thresholded per size instead).
struct Filter {
  static constexpr int kOff = INT_MAX;
  std::array<int, kNumComboTypes> min_rank{};
  std::array<int, 11> bomb_min_rank{};  // indexed by bomb size
  std::optional<CardSet> exact;         // only combos using exactly these cards

  static Filter all() {
    Filter f;
    f.min_rank.fill(-1);
    f.bomb_min_rank.fill(-1);
    return f;
  }
  static Filter beating(const Combo& last) {
    Filter f;
    f.min_rank.fill(kOff);
    f.bomb_min_rank.fill(kOff);
    const int tier = bomb_tier(last);
    if (tier < 0) {
      f.min_rank[static_cast<int>(last.type)] = last.rank;
    }
    auto allow = [&](int ladder_tier, int& slot) {
      if (ladder_tier > tier) slot = -1;
      else if (ladder_tier == tier) slot = last.rank;
    };
    for (int n = 4; n <= 10; ++n) {
      allow(n == 4 ? 0 : n == 5 ? 1 : n - 3, f.bomb_min_rank[n]);
    }
    allow(2, f.min_rank[static_cast<int>(ComboType::kStraightFlush)]);
    allow(8, f.min_rank[static_cast<int>(ComboType::kJokerBomb)]);
    // Bomb entries in min_rank gate the whole bomb family.
    f.min_rank[static_cast<int>(ComboType::kBomb)] = -1;
    return f;
  }
  bool wants(ComboType t) const { return min_rank[static_cast<int>(t)] != kOff; }
};

// One rank-group of a combo under construction: the natural cards chosen for
// it, how many wild cards fill the rest, and what those wilds stand for.
struct Part {
  CardSet cards;
  int wilds = 0;
  Suit target_suit = Suit::kSpades;
  Rank target_rank = Rank::kTwo;
};

struct GroupChoice {
  CardSet cards;
  int wilds = 0;
};

class Generator {
 public:
  Generator(const CardSet& hand, Level level, const Filter& filter, bool stop_at_first)
      : level_(level), filter_(filter), stop_at_first_(stop_at_first) {
    hand.for_each([&](CardId id) {
      const Rank r = card_rank(id);
      if (is_wild_id(id, level)) wilds_.push_back(id);
      else if (r == Rank::kBlackJoker) black_.push_back(id);
      else if (r == Rank::kRedJoker) red_.push_back(id);
      else nat_[rank_index(r)].push_back(id);
    });
    num_wilds_ = static_cast<int>(wilds_.size());
  }

  void run() {
    if (filter_.exact) {
      const int n = filter_.exact->size();
      gen_singles_pairs_triples(n);
      if (n == 4) gen_joker_bomb();
      if (n == 5) { gen_full_house(); gen_straights(); }
      if (n == 6) { gen_tubes(); gen_plates(); }
      if (n >= 4) gen_bombs();
      return;
    }
    gen_singles_pairs_triples(0);
    gen_full_house();
    gen_straights();
    gen_tubes();
    gen_plates();
    gen_bombs();
    gen_joker_bomb();
  }

  bool found() const { return found_; }
  std::vector<Combo> take() { return std::move(out_); }

 private:
  bool done() const { return stop_at_first_ && found_; }

  // All ways to pick k cards of face rank r: subsets of the naturals plus
  // wilds. An all-wild group is allowed only when `allow_all_wild`.
  const std::vector<GroupChoice>& choices(int r, int k, bool allow_all_wild) {
    auto& slot = cache_[r][k][allow_all_wild ? 1 : 0];
    if (slot.computed) return slot.items;
    slot.computed = true;
    const auto& nat = nat_[r];
    const int n = static_cast<int>(nat.size());
    for (int j = 0; j <= std::min(k, num_wilds_); ++j) {
      const int m = k - j;
      if (m == 0 && !allow_all_wild) continue;
      if (m > n) continue;
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != m) continue;
        CardSet s;
        for (int i = 0; i < n; ++i) {
          if (mask & (1u << i)) s.insert(nat[i]);
        }
        slot.items.push_back({s, j});
      }
    }
    return slot.items;
  }

  void emit(ComboType type, int rank, std::span<const Part> parts) {
    if (done()) return;
    if (type == ComboType::kBomb) {
      int size = 0;
      for (const Part& p : parts) size += p.cards.size() + p.wilds;
      if (rank <= filter_.bomb_min_rank[size]) return;
    } else if (rank <= filter_.min_rank[static_cast<int>(type)]) {
      return;
    }
    CardSet naturals;
    int total_wilds = 0;
    for (const Part& p : parts) {
      naturals |= p.cards;
      total_wilds += p.wilds;
    }
    if (total_wilds > num_wilds_) return;
    // Physical wilds: any `total_wilds`-subset of the held wilds.
    auto emit_with = [&](std::span<const CardId> chosen) {
      Combo c;
      c.type = type;
      c.rank = rank;
      c.cards = naturals;
      std::size_t w = 0;
      for (const Part& p : parts) {
        for (int i = 0; i < p.wilds; ++i) {
          c.cards.insert(chosen[w]);
          c.wild_targets[c.num_wild_targets++] = {chosen[w], p.target_suit, p.target_rank};
          ++w;
        }
      }
      if (filter_.exact && c.cards != *filter_.exact) return;
      if (stop_at_first_) {
        found_ = true;
        return;
      }
      const ComboKey key{c.cards.low_word(), c.cards.high_word(), static_cast<int>(type), rank};
      if (seen_.insert(key).second) out_.push_back(c);
    };
    if (total_wilds == 0) {
      emit_with({});
    } else if (total_wilds == 1) {
      for (CardId w : wilds_) {
        const CardId one[] = {w};
        emit_with(one);
      }
    } else {
      emit_with(wilds_);
    }
  }

  void emit_simple(ComboType type, int rank, const GroupChoice& g, Rank target_rank) {
    const Part p{g.cards, g.wilds, Suit::kSpades, target_rank};
    emit(type, rank, std::span<const Part>(&p, 1));
  }

  void gen_singles_pairs_triples(int exact_size) {
    static constexpr ComboType kTypes[] = {ComboType::kSingle, ComboType::kPair, ComboType::kTriple};
    for (int k = 1; k <= 3; ++k) {
      const ComboType type = kTypes[k - 1];
      if (!filter_.wants(type) || (exact_size != 0 && exact_size != k)) continue;
      for (int r = 0; r < kNumFaceRanks && !done(); ++r) {
        const Rank rank = rank_from_index(r);
        const int key = single_rank_ordinal(rank, level_);
        if (key <= filter_.min_rank[static_cast<int>(type)]) continue;
        for (const auto& g : choices(r, k, rank == level_.rank())) {
          emit_simple(type, key, g, rank);
        }
      }
      if (k <= 2) {
        gen_joker_groups(type, k, black_, Rank::kBlackJoker);
        gen_joker_groups(type, k, red_, Rank::kRedJoker);
      }
    }
  }

  void gen_joker_groups(ComboType type, int k, const std::vector<CardId>& jokers, Rank rank) {
    const int key = single_rank_ordinal(rank, level_);
    if (k == 1) {
      for (CardId id : jokers) {
        emit_simple(type, key, {CardSet::from_ids(std::span(&id, 1)), 0}, rank);
      }
    } else if (jokers.size() == 2) {
      emit_simple(type, key, {CardSet::from_ids(jokers), 0}, rank);
    }
  }

  void gen_full_house() {
    if (!filter_.wants(ComboType::kFullHouse)) return;
    const int min_key = filter_.min_rank[static_cast<int>(ComboType::kFullHouse)];
    for (int t = 0; t < kNumFaceRanks && !done(); ++t) {
      const Rank trank = rank_from_index(t);
      const int key = single_rank_ordinal(trank, level_);
      if (key <= min_key) continue;
      const auto triples = choices(t, 3, false);
      if (triples.empty()) continue;
      for (const auto& tri : triples) {
        Part parts[2] = {{tri.cards, tri.wilds, Suit::kSpades, trank}, {}};
        for (int p = 0; p < kNumFaceRanks; ++p) {
          if (p == t) continue;
          for (const auto& pair : choices(p, 2, true)) {
            if (tri.wilds + pair.wilds > num_wilds_) continue;
            parts[1] = {pair.cards, pair.wilds, Suit::kSpades, rank_from_index(p)};
            emit(ComboType::kFullHouse, key, parts);
          }
        }
        for (const auto* jokers : {&black_, &red_}) {
          if (jokers->size() != 2) continue;
          parts[1] = {CardSet::from_ids(*jokers), 0, Suit::kNone, card_rank((*jokers)[0])};
          emit(ComboType::kFullHouse, key, parts);
        }
      }
    }
  }

  // Cartesian product over sequence positions, each taking one group choice.
  template <typename ChoiceFn>
  void sequence(ComboType type, int start, int length, ChoiceFn&& choice_fn, Suit target_suit) {
    std::array<Part, 5> parts;
    const int key = sequence_key(start);
    auto rec = [&](auto& self, int pos, int wilds_used) -> void {
      if (done()) return;
      if (pos == length) {
        emit(type, key, std::span<const Part>(parts.data(), length));
        return;
      }
      const int r = sequence_rank(start, pos);
      for (const auto& g : choice_fn(r)) {
        if (wilds_used + g.wilds > num_wilds_) continue;
        parts[pos] = {g.cards, g.wilds, target_suit, rank_from_index(r)};
        self(self, pos + 1, wilds_used + g.wilds);
      }
    };
    rec(rec, 0, 0);
  }

  void gen_straights() {
    const bool plain = filter_.wants(ComboType::kStraight);
    const bool flush = filter_.wants(ComboType::kStraightFlush);
    for (int s = -1; s <= 8 && !done(); ++s) {
      if (plain && sequence_key(s) > filter_.min_rank[static_cast<int>(ComboType::kStraight)]) {
        sequence(ComboType::kStraight, s, 5,
                 [&](int r) -> const std::vector<GroupChoice>& { return choices(r, 1, true); },
                 Suit::kSpades);
      }
      if (flush && sequence_key(s) > filter_.min_rank[static_cast<int>(ComboType::kStraightFlush)]) {
        for (int suit = 0; suit < 4; ++suit) {
          sequence(ComboType::kStraightFlush, s, 5,
                   [&](int r) -> const std::vector<GroupChoice>& {
                     return suited_choices(r, suit_from_index(suit));
                   },
                   suit_from_index(suit));
        }
      }
    }
  }

  // One card of rank r in suit s, or one wild.
  const std::vector<GroupChoice>& suited_choices(int r, Suit s) {
    auto& slot = suited_cache_[r][suit_index(s)];
    if (slot.computed) return slot.items;
    slot.computed = true;
    for (CardId id : nat_[r]) {
      if (card_suit(id) == s) slot.items.push_back({CardSet::from_ids(std::span(&id, 1)), 0});
    }
    if (num_wilds_ > 0) slot.items.push_back({CardSet{}, 1});
    return slot.items;
  }

  void gen_tubes() {
    if (!filter_.wants(ComboType::kTube)) return;
    for (int s = -1; s <= 10 && !done(); ++s) {
      if (sequence_key(s) <= filter_.min_rank[static_cast<int>(ComboType::kTube)]) continue;
      sequence(ComboType::kTube, s, 3,
               [&](int r) -> const std::vector<GroupChoice>& { return choices(r, 2, true); },
               Suit::kSpades);
    }
  }

  void gen_plates() {
    if (!filter_.wants(ComboType::kPlate)) return;
    for (int s = -1; s <= 11 && !done(); ++s) {
      if (sequence_key(s) <= filter_.min_rank[static_cast<int>(ComboType::kPlate)]) continue;
      sequence(ComboType::kPlate, s, 2,
               [&](int r) -> const std::vector<GroupChoice>& { return choices(r, 3, true); },
               Suit::kSpades);
    }
  }

  void gen_bombs() {
    if (!filter_.wants(ComboType::kBomb)) return;
    const int exact_size = filter_.exact ? filter_.exact->size() : 0;
    for (int r = 0; r < kNumFaceRanks && !done(); ++r) {
      const Rank rank = rank_from_index(r);
      const int key = single_rank_ordinal(rank, level_);
      const int available = static_cast<int>(nat_[r].size()) + num_wilds_;
      for (int n = 4; n <= std::min(10, available); ++n) {
        if (exact_size != 0 && n != exact_size) continue;
        if (key <= filter_.bomb_min_rank[n]) continue;
        for (const auto& g : choices(r, n, false)) emit_simple(ComboType::kBomb, key, g, rank);
      }
    }
  }

  void gen_joker_bomb() {
    if (!filter_.wants(ComboType::kJokerBomb)) return;
    if (black_.size() != 2 || red_.size() != 2) return;
    const CardSet all = CardSet::from_ids(black_) | CardSet::from_ids(red_);
    const Part p{all, 0, Suit::kNone, Rank::kRedJoker};
    emit(ComboType::kJokerBomb, 0, std::span<const Part>(&p, 1));
  }

  struct ChoiceSlot {
    bool computed = false;
    std::vector<GroupChoice> items;
  };

  Level level_;
  const Filter& filter_;
  bool stop_at_first_;
  bool found_ = false;
  std::array<std::vector<CardId>, kNumFaceRanks> nat_;
  std::vector<CardId> black_, red_, wilds_;
  int num_wilds_ = 0;
  std::array<std::array<std::array<ChoiceSlot, 2>, 11>, kNumFaceRanks> cache_;
  std::array<std::array<ChoiceSlot, 4>, kNumFaceRanks> suited_cache_;
  std::unordered_set<ComboKey, ComboKeyHash> seen_;
  std::vector<Combo> out_;
};

std::vector<Combo> generate(const CardSet& hand, Level level, const Filter& filter) {
  Generator gen(hand, level, filter, false);
  gen.run();
  auto out = gen.take();
  std::sort(out.begin(), out.end(), combo_less);
  return out;
}

}  // namespace

std::string_view combo_type_name(ComboType type) { return kTypeNames[static_cast<int>(type)]; }

std::optional<ComboType> parse_combo_type(std::string_view name) {
  for (int i = 0; i < kNumComboTypes; ++i) {
    if (kTypeNames[i] == name) return static_cast<ComboType>(i);
  }
  return std::nullopt;
}

int bomb_tier(const Combo& c) {
  switch (c.type) {
    case ComboType::kBomb: {
      const int n = c.size();
      return n == 4 ? 0 : n == 5 ? 1 : n - 3;
    }
    case ComboType::kStraightFlush: return 2;
    case ComboType::kJokerBomb: return 8;
    default: return -1;
  }
}

bool beats(const Combo& a, const Combo& b) {
  const int ta = bomb_tier(a);
  const int tb = bomb_tier(b);
  if (ta >= 0 || tb >= 0) {
    if (ta != tb) return ta > tb;
    return a.rank > b.rank;
  }
  return a.type == b.type && a.rank > b.rank;
}

int max_rank_key(ComboType type, int size, Level level) {
  const int level_key = 13;
  const int top_face = level.rank() == Rank::kAce ? rank_index(Rank::kKing) : rank_index(Rank::kAce);
  switch (type) {
    case ComboType::kSingle:
    case ComboType::kPair: return 15;
    case ComboType::kTriple:
    case ComboType::kFullHouse: return level_key;
    case ComboType::kStraight:
    case ComboType::kStraightFlush: return 10;
    case ComboType::kTube: return 12;
    case ComboType::kPlate: return 13;
    // The level rank has 8 cards including the two wilds; 9- and 10-card
    // bombs need both wilds on top of eight naturals of another rank.
    case ComboType::kBomb: return size <= 8 ? level_key : top_face;
    case ComboType::kJokerBomb: return 0;
  }
  return 0;
}

bool combo_less(const Combo& a, const Combo& b) {
  if (a.type != b.type) return a.type < b.type;
  if (a.rank != b.rank) return a.rank < b.rank;
  return a.cards < b.cards;
}

std::vector<Combo> classify(const CardSet& cards, Level level) {
  const int n = cards.size();
  if (n < 1 || n > 10) return {};
  Filter f = Filter::all();
  f.exact = cards;
  return generate(cards, level, f);
}

std::vector<Combo> legal_leads(const CardSet& hand, Level level) {
  return generate(hand, level, Filter::all());
}

std::vector<Combo> legal_follows(const CardSet& hand, const Combo& last, Level level) {
  if (last.type == ComboType::kJokerBomb) return {};
  return generate(hand, level, Filter::beating(last));
}

bool has_follow(const CardSet& hand, const Combo& last, Level level) {
  if (last.type == ComboType::kJokerBomb) return false;
  const Filter f = Filter::beating(last);
  Generator gen(hand, level, f, true);
  gen.run();
  return gen.found();
}

std::string to_string(const Combo& c) {
  std::string s(combo_type_name(c.type));
  s += '(' + std::to_string(c.rank) + ") [" + to_string(c.cards) + ']';
  return s;
}

std::string to_string(const Action& a) { return a.is_pass() ? "pass" : to_string(*a.combo); }

}  // namespace guanzero
