#include <map>
#include <set>

#include "doctest.h"
#include "guanzero/combos.h"
#include "oracle.h"
#include "test_util.h"

namespace guanzero {
namespace {

using testing::cards_of;
using testing::cid;

std::set<oracle::MoveKey> keys(const std::vector<Combo>& moves) {
  std::set<oracle::MoveKey> out;
  for (const auto& c : moves) out.insert(oracle::key_of(c));
  return out;
}

Combo only(const std::vector<Combo>& v, ComboType type) {
  for (const auto& c : v) {
    if (c.type == type) return c;
  }
  FAIL("no combo of requested type");
  return {};
}

const Level kTwo(Rank::kTwo);

TEST_CASE("classify rejects a mixed joker pair and accepts the joker bomb") {
  const CardId bj0 = cid(0, Suit::kNone, Rank::kBlackJoker);
  const CardId rj0 = cid(0, Suit::kNone, Rank::kRedJoker);
  const CardId bj1 = cid(1, Suit::kNone, Rank::kBlackJoker);
  const CardId rj1 = cid(1, Suit::kNone, Rank::kRedJoker);
  CHECK(classify(cards_of({bj0, rj0}), kTwo).empty());
  const auto bomb = classify(cards_of({bj0, rj0, bj1, rj1}), kTwo);
  REQUIRE(bomb.size() == 1);
  CHECK(bomb[0].type == ComboType::kJokerBomb);
  const auto pair = classify(cards_of({rj0, rj1}), kTwo);
  REQUIRE(pair.size() == 1);
  CHECK(pair[0].type == ComboType::kPair);
  CHECK(pair[0].rank == 15);
}

TEST_CASE("classify with two wilds matches the brute-force oracle") {
  const Level five(Rank::kFive);
  const CardSet cards = cards_of({cid(0, Suit::kHearts, Rank::kFive), cid(1, Suit::kHearts, Rank::kFive),
                                  cid(0, Suit::kSpades, Rank::kKing), cid(0, Suit::kDiamonds, Rank::kKing)});
  const auto got = classify(cards, five);
  std::set<oracle::MoveKey> expected;
  for (const auto& k : oracle::brute_force_moves(cards, five, nullptr)) {
    if (std::get<0>(k) == cards.low_word() && std::get<1>(k) == cards.high_word()) expected.insert(k);
  }
  CHECK(keys(got) == expected);
  REQUIRE(got.size() == 1);
  CHECK(got[0].type == ComboType::kBomb);
  CHECK(got[0].rank == rank_index(Rank::kKing));
  CHECK(got[0].num_wild_targets == 2);
}

TEST_CASE("ace-low sequences take declared rank one") {
  const CardSet straight = cards_of({cid(0, Suit::kSpades, Rank::kAce), cid(0, Suit::kClubs, Rank::kTwo),
                                     cid(0, Suit::kSpades, Rank::kThree), cid(0, Suit::kSpades, Rank::kFour),
                                     cid(0, Suit::kSpades, Rank::kFive)});
  const Level nine(Rank::kNine);
  const Combo s = only(classify(straight, nine), ComboType::kStraight);
  CHECK(s.rank == 1);
  const CardSet plate = cards_of({cid(0, Suit::kSpades, Rank::kAce), cid(0, Suit::kClubs, Rank::kAce),
                                  cid(1, Suit::kSpades, Rank::kAce), cid(0, Suit::kSpades, Rank::kTwo),
                                  cid(0, Suit::kClubs, Rank::kTwo), cid(1, Suit::kClubs, Rank::kTwo)});
  CHECK(only(classify(plate, nine), ComboType::kPlate).rank == 1);
  // Level cards count at face value inside sequences.
  const CardSet level_straight = cards_of({cid(0, Suit::kSpades, Rank::kEight), cid(0, Suit::kClubs, Rank::kNine),
                                           cid(0, Suit::kSpades, Rank::kTen), cid(0, Suit::kSpades, Rank::kJack),
                                           cid(0, Suit::kSpades, Rank::kQueen)});
  CHECK(only(classify(level_straight, nine), ComboType::kStraight).rank == 8);
}

TEST_CASE("beats follows the bomb ladder and rank chain") {
  Combo joker_bomb{ComboType::kJokerBomb, 0};
  Combo ace_bomb10{ComboType::kBomb, rank_index(Rank::kAce)};
  for (int d = 0; d < 2; ++d) {
    for (int s = 0; s < 4; ++s) ace_bomb10.cards.insert(cid(d, suit_from_index(s), Rank::kAce));
  }
  ace_bomb10.cards.insert(cid(0, Suit::kSpades, Rank::kTwo));
  ace_bomb10.cards.insert(cid(1, Suit::kSpades, Rank::kTwo));  // stand-ins to reach 10 cards
  REQUIRE(ace_bomb10.size() == 10);
  CHECK(beats(joker_bomb, ace_bomb10));
  CHECK_FALSE(beats(ace_bomb10, joker_bomb));

  const Level seven(Rank::kSeven);
  const auto lvl = classify(cards_of({cid(0, Suit::kSpades, Rank::kSeven)}), seven);
  const auto ace = classify(cards_of({cid(0, Suit::kSpades, Rank::kAce)}), seven);
  CHECK(beats(lvl[0], ace[0]));
  CHECK_FALSE(beats(ace[0], lvl[0]));

  const auto low = only(classify(cards_of({cid(0, Suit::kSpades, Rank::kAce), cid(0, Suit::kClubs, Rank::kTwo),
                                           cid(0, Suit::kSpades, Rank::kThree), cid(0, Suit::kClubs, Rank::kFour),
                                           cid(0, Suit::kSpades, Rank::kFive)}), seven),
                        ComboType::kStraight);
  const auto two_six = only(classify(cards_of({cid(0, Suit::kSpades, Rank::kSix), cid(0, Suit::kClubs, Rank::kTwo),
                                               cid(0, Suit::kSpades, Rank::kThree), cid(0, Suit::kClubs, Rank::kFour),
                                               cid(0, Suit::kSpades, Rank::kFive)}), seven),
                            ComboType::kStraight);
  CHECK(beats(two_six, low));
  CHECK_FALSE(beats(low, two_six));

  // Straight flush sits between 5- and 6-card bombs.
  Combo sf{ComboType::kStraightFlush, 2};
  for (int r = 0; r < 5; ++r) sf.cards.insert(cid(0, Suit::kClubs, rank_from_index(r)));
  Combo b5{ComboType::kBomb, 12};
  Combo b6{ComboType::kBomb, 0};
  for (int i = 0; i < 5; ++i) b5.cards.insert(i + 60);
  for (int i = 0; i < 6; ++i) b6.cards.insert(i + 70);
  CHECK(beats(sf, b5));
  CHECK(beats(b6, sf));
  CHECK(beats(sf, two_six));
}

TEST_CASE("legal_follows edge cases") {
  const Level two(Rank::kTwo);
  const CardId rj = cid(0, Suit::kNone, Rank::kRedJoker);
  const Combo red_joker = classify(cards_of({rj}), two)[0];
  const CardSet hand = cards_of({cid(0, Suit::kSpades, Rank::kAce), cid(1, Suit::kNone, Rank::kBlackJoker),
                                 cid(0, Suit::kClubs, Rank::kFour)});
  CHECK(legal_follows(hand, red_joker, two).empty());
  CHECK_FALSE(has_follow(hand, red_joker, two));

  Combo joker_bomb{ComboType::kJokerBomb, 0};
  CHECK(legal_follows(CardSet::full_deck(), joker_bomb, two).empty());
}

TEST_CASE("legal_leads on small hands") {
  const CardSet one = cards_of({cid(0, Suit::kSpades, Rank::kNine)});
  const auto l1 = legal_leads(one, kTwo);
  REQUIRE(l1.size() == 1);
  CHECK(l1[0].type == ComboType::kSingle);

  const CardSet four = cards_of({cid(0, Suit::kSpades, Rank::kNine), cid(0, Suit::kClubs, Rank::kNine),
                                 cid(1, Suit::kSpades, Rank::kNine), cid(1, Suit::kDiamonds, Rank::kNine)});
  const auto l4 = legal_leads(four, kTwo);
  std::map<ComboType, int> by_type;
  for (const auto& c : l4) ++by_type[c.type];
  CHECK(by_type[ComboType::kSingle] == 4);
  CHECK(by_type[ComboType::kPair] == 6);
  CHECK(by_type[ComboType::kTriple] == 4);
  CHECK(by_type[ComboType::kBomb] == 1);
  CHECK(l4.size() == 15);
}

TEST_CASE("generated combos are valid, sorted, and never target jokers") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Level level(rank_from_index(static_cast<int>(rng.uniform(13))));
    const CardSet hand = testing::random_hand(rng, 14, level, trial % 3);
    const auto leads = legal_leads(hand, level);
    REQUIRE_FALSE(leads.empty());
    for (std::size_t i = 0; i < leads.size(); ++i) {
      const Combo& c = leads[i];
      if (i > 0) CHECK(combo_less(leads[i - 1], c));
      CHECK(c.cards.subset_of(hand));
      // Substitute the wild targets and re-check the pattern.
      std::vector<oracle::Face> faces;
      c.cards.for_each([&](CardId id) {
        if (!is_wild_id(id, level)) faces.push_back({card_suit(id), card_rank(id)});
      });
      int wilds_in_cards = 0;
      c.cards.for_each([&](CardId id) { wilds_in_cards += is_wild_id(id, level) ? 1 : 0; });
      if (wilds_in_cards == c.size()) {
        c.cards.for_each([&](CardId id) { faces.push_back({card_suit(id), card_rank(id)}); });
      } else {
        CHECK(c.num_wild_targets == wilds_in_cards);
        for (int w = 0; w < c.num_wild_targets; ++w) {
          CHECK_FALSE(is_joker(c.wild_targets[w].rank));
          faces.push_back({c.wild_targets[w].suit, c.wild_targets[w].rank});
        }
      }
      bool matched = false;
      for (const auto& interp : oracle::classify_faces(faces, level)) {
        matched = matched || (interp.type == c.type && interp.rank == c.rank);
      }
      CHECK(matched);
    }
  }
}

TEST_CASE("beats is irreflexive and asymmetric") {
  Rng rng(5);
  std::vector<Combo> pool;
  for (int i = 0; i < 6; ++i) {
    const auto leads = legal_leads(testing::random_hand(rng, 16, kTwo, i % 3), kTwo);
    for (std::size_t j = 0; j < leads.size(); j += 7) pool.push_back(leads[j]);
  }
  for (const auto& a : pool) {
    CHECK_FALSE(beats(a, a));
    for (const auto& b : pool) {
      if (beats(a, b)) CHECK_FALSE(beats(b, a));
    }
  }
}

TEST_CASE("move generation equals the brute-force oracle on random hands") {
  Rng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const Level level(rank_from_index(static_cast<int>(rng.uniform(13))));
    const int size = 1 + static_cast<int>(rng.uniform(10));
    const CardSet hand = testing::random_hand(rng, size, level, trial % 4 == 0 ? 1 : 0);
    CHECK(keys(legal_leads(hand, level)) == oracle::brute_force_moves(hand, level, nullptr));

    const auto other = legal_leads(testing::random_hand(rng, 12, level, 0, hand), level);
    const Combo& last = other[rng.uniform(other.size())];
    const auto follows = legal_follows(hand, last, level);
    CHECK(keys(follows) == oracle::brute_force_moves(hand, level, &last));
    CHECK(has_follow(hand, last, level) == !follows.empty());
    for (const auto& f : follows) {
      CHECK(beats(f, last));
      CHECK(f.cards.subset_of(hand));
    }
  }
}

TEST_CASE("max_rank_key identifies top-ranked combos") {
  const Level two(Rank::kTwo);
  CHECK(max_rank_key(ComboType::kSingle, 1, two) == 15);
  CHECK(max_rank_key(ComboType::kTriple, 3, two) == 13);
  CHECK(max_rank_key(ComboType::kStraight, 5, two) == 10);
  CHECK(max_rank_key(ComboType::kBomb, 8, two) == 13);
  CHECK(max_rank_key(ComboType::kBomb, 10, two) == rank_index(Rank::kAce));
  CHECK(max_rank_key(ComboType::kBomb, 10, Level(Rank::kAce)) == rank_index(Rank::kKing));
}

}  // namespace
}  // namespace guanzero
