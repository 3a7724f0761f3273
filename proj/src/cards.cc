#include "guanzero/cards.h"

#include <numeric>

namespace guanzero {

bool is_valid_card(const Card& card) {
  if (card.deck != 0 && card.deck != 1) return false;
  if (rank_index(card.rank) < 0 || rank_index(card.rank) >= kNumRanks) return false;
  if (is_joker(card.rank)) return card.suit == Suit::kNone;
  return card.suit != Suit::kNone && suit_index(card.suit) < 4;
}

CardId card_index(const Card& card) {
  return make_card_id(card.deck, card.suit, card.rank);
}

Card index_card(CardId id) {
  if (id < 0 || id >= kNumCards) {
    throw std::out_of_range("card id out of range: " + std::to_string(id));
  }
  return Card{id / kCardsPerDeck, card_suit(id), card_rank(id)};
}

bool is_wild(const Card& card, Level level) {
  return card.suit == Suit::kHearts && card.rank == level.rank();
}

int single_rank_ordinal(Rank rank, Level level) {
  switch (rank) {
    case Rank::kBlackJoker: return 14;
    case Rank::kRedJoker: return 15;
    default: return rank == level.rank() ? 13 : rank_index(rank);
  }
}

std::string rank_name(Rank r) {
  static constexpr const char* kNames[] = {"2", "3", "4", "5", "6", "7", "8", "9",
                                           "10", "J", "Q", "K", "A", "BJ", "RJ"};
  return kNames[rank_index(r)];
}

std::string suit_name(Suit s) {
  static constexpr const char* kNames[] = {"S", "H", "C", "D", ""};
  return kNames[suit_index(s)];
}

std::string card_name(CardId id) {
  const Card c = index_card(id);
  std::string name = rank_name(c.rank) + suit_name(c.suit);
  if (c.deck == 1) name += '\'';
  return name;
}

std::strong_ordering operator<=>(const CardSet& a, const CardSet& b) {
  // Lexicographic on the 0/1 indicator vector: at the lowest differing id,
  // the set holding it is greater.
  const std::uint64_t dlo = a.lo_ ^ b.lo_;
  if (dlo != 0) {
    const std::uint64_t bit = dlo & (~dlo + 1);
    return (a.lo_ & bit) ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  const std::uint64_t dhi = a.hi_ ^ b.hi_;
  if (dhi != 0) {
    const std::uint64_t bit = dhi & (~dhi + 1);
    return (a.hi_ & bit) ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

std::string to_string(const CardSet& cards) {
  std::string out;
  cards.for_each([&](CardId id) {
    if (!out.empty()) out += ' ';
    out += card_name(id);
  });
  return out;
}

std::uint64_t Rng::uniform(std::uint64_t bound) {
  // Rejection sampling on the top of the 64-bit range.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

std::array<CardId, kNumCards> shuffled_deck(Rng& rng) {
  std::array<CardId, kNumCards> perm;
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = kNumCards - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

Deal deal_from_permutation(std::span<const CardId> permutation, int leader) {
  if (permutation.size() != kNumCards) {
    throw std::invalid_argument("deal permutation must hold 108 card ids");
  }
  if (leader < 0 || leader >= kNumSeats) throw std::invalid_argument("leader seat out of range");
  Deal d;
  CardSet seen;
  for (int i = 0; i < kNumCards; ++i) {
    const CardId id = permutation[i];
    if (id < 0 || id >= kNumCards || seen.contains(id)) {
      throw std::invalid_argument("deal permutation is not a permutation of 0..107");
    }
    seen.insert(id);
    d.hands[i / kHandSize].insert(id);
  }
  d.leader = leader;
  return d;
}

Deal deal(std::uint64_t seed) {
  Rng rng(seed);
  const auto perm = shuffled_deck(rng);
  return deal_from_permutation(perm, 0);
}

}  // namespace guanzero
