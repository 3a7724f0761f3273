#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "guanzero/features.h"
#include "test_util.h"

namespace guanzero {
namespace {

using testing::cards_of;
using testing::cid;

template <typename Arr>
float sum_range(const Arr& a, int from, int len) {
  return std::accumulate(a.begin() + from, a.begin() + from + len, 0.0f);
}

TEST_CASE("dimensional contract") {
  CHECK(kFlatDim == 108 + 108 + 4 * 108 + 3 * 108 + 3 * 27 + 13 + 9);
  CHECK(kHistoryDim == 5 * 432);
  CHECK(kFlatDim + kHistoryDim + kActionDim == 3343);
  CHECK(kFlagOffset + kNumFlags == kFlatDim);
}

TEST_CASE("encode_cards") {
  const auto empty = encode_cards({});
  CHECK(sum_range(empty, 0, 108) == 0);
  const auto full = encode_cards(CardSet::full_deck());
  CHECK(sum_range(full, 0, 108) == 108);
  Rng rng(5);
  const CardSet h = testing::random_hand(rng, 27, Level(Rank::kTwo));
  const auto a = encode_cards(h);
  const auto b = encode_cards(CardSet::full_deck() - h);
  for (int i = 0; i < 108; ++i) CHECK(a[i] + b[i] == 1.0f);
}

TEST_CASE("encode_count and encode_level") {
  CHECK(encode_count(27)[26] == 1);
  CHECK(sum_range(encode_count(0), 0, 27) == 0);
  CHECK(encode_count(1)[0] == 1);
  CHECK(sum_range(encode_count(13), 0, 27) == 1);
  CHECK_THROWS_AS(encode_count(28), std::out_of_range);
  CHECK_THROWS_AS(encode_count(-1), std::out_of_range);
  CHECK(encode_level(Level(Rank::kTwo))[0] == 1);
  CHECK(encode_level(Level(Rank::kAce))[12] == 1);
  for (int r = 0; r < 13; ++r) CHECK(sum_range(encode_level(Level(static_cast<Rank>(r))), 0, 13) == 1);
}

TEST_CASE("encode_action") {
  CHECK(sum_range(encode_action(Action::pass()), 0, 108) == 0);
  const Level two(Rank::kTwo);
  const auto single = encode_action(Action::play(classify(cards_of({17}), two).at(0)));
  CHECK(single[17] == 1);
  CHECK(sum_range(single, 0, 108) == 1);
  const CardSet jokers = cards_of({52, 53, 106, 107});
  const auto jb = classify(jokers, two);
  REQUIRE(jb.size() == 1);
  CHECK(jb[0].type == ComboType::kJokerBomb);
  const auto v = encode_action(Action::play(jb[0]));
  CHECK(v[52] == 1);
  CHECK(v[53] == 1);
  CHECK(v[106] == 1);
  CHECK(v[107] == 1);
  CHECK(sum_range(v, 0, 108) == 4);
}

TEST_CASE("wild targets do not change the action encoding") {
  const Level two(Rank::kTwo);
  // Wild plus a five: pair of fives, and the wild could in principle stand
  // for any suit; all readings encode the same physical cards.
  const CardSet cards = cards_of({cid(0, Suit::kHearts, Rank::kTwo), cid(0, Suit::kSpades, Rank::kFive)});
  for (const Combo& c : classify(cards, two)) CHECK(encode_action(Action::play(c)) == encode_cards(cards));
}

TEST_CASE("opening state") {
  const auto s = start_mini_game(deal(3), Level(Rank::kSeven));
  const auto legal = legal_actions(s);
  const auto f = encode_state(s, s.current, legal[0]);
  CHECK(sum_range(f.history, 0, kHistoryDim) == 0);
  CHECK(sum_range(f.flat, kOwnHandOffset, 108) == 27);
  CHECK(sum_range(f.flat, kOthersHandOffset, 108) == 81);
  CHECK(sum_range(f.flat, kLastActionOffset, 432) == 0);
  CHECK(sum_range(f.flat, kPlayedOffset, 324) == 0);
  for (int i = 0; i < 3; ++i) CHECK(f.flat[kCountOffset + i * 27 + 26] == 1);
  CHECK(f.flat[kLevelOffset + 5] == 1);
  CHECK(sum_range(f.flat, kFlagOffset, 9) == 3);
}

// Replays the history from the deal to recompute what each seat has played.
std::array<CardSet, 4> replay_played(const MiniGameState& s) {
  std::array<CardSet, 4> out;
  for (const auto& e : s.history) {
    if (!e.action.is_pass()) out[e.seat] |= e.action.combo->cards;
  }
  return out;
}

TEST_CASE("random playouts: feature slices match recomputation") {
  Rng rng(31);
  for (int game = 0; game < 6; ++game) {
    const Level level(static_cast<Rank>((game * 4) % 13));
    auto s = start_mini_game(deal(500 + game), level);
    while (!s.done()) {
      const int seat = s.current;
      const auto legal = legal_actions(s);
      const auto d = encode_decision(s, legal);
      const auto played = replay_played(s);
      CardSet all_played;
      for (const auto& p : played) all_played |= p;

      const auto& f = d.base.flat;
      for (float x : f) CHECK((x == 0.0f || x == 1.0f));
      for (float x : d.base.history) CHECK((x == 0.0f || x == 1.0f));
      CHECK(sum_range(f, kOwnHandOffset, 108) == s.hands[seat].size());
      const CardSet others_expected = CardSet::full_deck() - s.hands[seat] - all_played;
      bool others_ok = true;
      for (int i = 0; i < 108; ++i) {
        others_ok = others_ok && f[kOthersHandOffset + i] == (others_expected.contains(i) ? 1.0f : 0.0f);
      }
      CHECK(others_ok);
      for (int rel = 1; rel < 4; ++rel) {
        const int p = (seat + rel) % 4;
        bool ok = true;
        for (int i = 0; i < 108; ++i) {
          ok = ok && f[kPlayedOffset + (rel - 1) * 108 + i] == (played[p].contains(i) ? 1.0f : 0.0f);
        }
        CHECK(ok);
        const int n = s.hands[p].size();
        CHECK(sum_range(f, kCountOffset + (rel - 1) * 27, 27) == (n > 0 ? 1 : 0));
        if (n > 0) CHECK(f[kCountOffset + (rel - 1) * 27 + n - 1] == 1);
      }
      // Most recent action per seat, found by scanning the history backwards.
      for (int rel = 0; rel < 4; ++rel) {
        const int p = (seat + rel) % 4;
        CardSet expect;
        for (auto it = s.history.rbegin(); it != s.history.rend(); ++it) {
          if (it->seat == p) {
            if (!it->action.is_pass()) expect = it->action.combo->cards;
            break;
          }
        }
        CHECK(sum_range(f, kLastActionOffset + rel * 108, 108) == expect.size());
        bool ok = true;
        expect.for_each([&](CardId id) { ok = ok && f[kLastActionOffset + rel * 108 + id] == 1.0f; });
        CHECK(ok);
      }
      // History window: slot j of 20 holds action (n - 20 + j).
      const int n = static_cast<int>(s.history.size());
      bool hist_ok = true;
      for (int j = 0; j < 20; ++j) {
        const int idx = n - 20 + j;
        CardSet expect;
        if (idx >= 0 && !s.history[idx].action.is_pass()) expect = s.history[idx].action.combo->cards;
        for (int i = 0; i < 108; ++i) {
          hist_ok = hist_ok && d.base.history[j * 108 + i] == (expect.contains(i) ? 1.0f : 0.0f);
        }
      }
      CHECK(hist_ok);
      CHECK(sum_range(f, kFlagOffset, 9) == 0);

      // Per-candidate full encodings agree with the shared decision encoding.
      const std::size_t pick = rng.uniform(legal.size());
      const auto full = encode_state(s, seat, legal[pick]);
      auto expect_flat = d.base.flat;
      write_flags(d.flags[pick], expect_flat.data() + kFlagOffset);
      CHECK(full.flat == expect_flat);
      CHECK(full.history == d.base.history);
      CHECK(sum_range(full.flat, kFlagOffset, 9) == 3);
      const auto again = encode_state(s, seat, legal[pick]);
      CHECK(again.flat == full.flat);
      const auto ablated = encode_state(s, seat, legal[pick], false);
      CHECK(sum_range(ablated.flat, kFlagOffset, 9) == 0);
      CHECK(std::equal(ablated.flat.begin(), ablated.flat.begin() + kFlagOffset, full.flat.begin()));

      apply_in_place(s, legal[pick]);
    }
  }
}

}  // namespace
}  // namespace guanzero
