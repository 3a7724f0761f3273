#include "guanzero/engine.h"

#include <algorithm>
#include <string>

namespace guanzero {

namespace {

int next_live(const MiniGameState& s, int seat) {
  for (int i = 1; i <= kNumSeats; ++i) {
    const int cand = (seat + i) % kNumSeats;
    if (s.live(cand)) return cand;
  }
  return seat;
}

bool is_declared_combo(const Combo& combo, Level level) {
  for (const Combo& c : classify(combo.cards, level)) {
    if (c.type == combo.type && c.rank == combo.rank) return true;
  }
  return false;
}

}  // namespace

MiniGameState start_mini_game(const std::array<CardSet, kNumSeats>& hands, int leader, Level level,
                              std::array<Level, 2> team_levels) {
  MiniGameState s;
  s.hands = hands;
  s.level = level;
  s.team_levels = team_levels;
  s.leader = leader;
  s.current = leader;
  s.phase = Phase::kPlay;
  return s;
}

MiniGameState start_mini_game(const Deal& deal, Level level) {
  return start_mini_game(deal.hands, deal.leader, level, {level, level});
}

std::vector<Action> legal_actions(const MiniGameState& state) {
  if (state.phase != Phase::kPlay) throw IllegalAction("legal_actions outside the play phase");
  const CardSet& hand = state.hands[state.current];
  std::vector<Action> out;
  if (state.leading()) {
    for (auto& c : legal_leads(hand, state.level)) out.push_back(Action::play(std::move(c)));
  } else {
    for (auto& c : legal_follows(hand, *state.table, state.level)) out.push_back(Action::play(std::move(c)));
    out.push_back(Action::pass());
  }
  return out;
}

void apply_in_place(MiniGameState& s, const Action& action) {
  if (s.phase != Phase::kPlay) throw IllegalAction("mini game is not in the play phase");
  const int seat = s.current;
  if (action.is_pass()) {
    if (s.leading()) throw IllegalAction("cannot pass when leading");
    s.last_action[seat] = static_cast<int>(s.history.size());
    s.history.push_back({seat, action});
    ++s.consecutive_passes;
    int others = 0;
    for (int p = 0; p < kNumSeats; ++p) others += (p != s.table_owner && s.live(p)) ? 1 : 0;
    if (s.consecutive_passes >= others) {
      // Trick over. A finished owner hands the lead to their teammate.
      const int owner = s.table_owner;
      s.table.reset();
      s.table_owner = -1;
      s.consecutive_passes = 0;
      if (s.live(owner)) s.current = owner;
      else if (s.live(teammate_of(owner))) s.current = teammate_of(owner);
      else s.current = next_live(s, owner);
    } else {
      s.current = next_live(s, seat);
    }
    return;
  }

  const Combo& combo = *action.combo;
  if (!combo.cards.subset_of(s.hands[seat])) throw IllegalAction("combo uses cards not in hand");
  if (!is_declared_combo(combo, s.level)) {
    throw IllegalAction("cards do not form " + to_string(combo));
  }
  if (!s.leading() && !beats(combo, *s.table)) {
    throw IllegalAction(to_string(combo) + " does not beat " + to_string(*s.table));
  }
  s.hands[seat] -= combo.cards;
  s.played[seat] |= combo.cards;
  s.last_action[seat] = static_cast<int>(s.history.size());
  s.history.push_back({seat, action});
  s.table = combo;
  s.table_owner = seat;
  s.consecutive_passes = 0;
  if (s.hands[seat].empty()) {
    s.finished_order.push_back(seat);
    if (s.finished_order.size() == 3) {
      s.phase = Phase::kDone;
      s.table.reset();
      return;
    }
  }
  s.current = next_live(s, seat);
}

MiniGameState apply(MiniGameState state, const Action& action) {
  apply_in_place(state, action);
  return state;
}

std::array<int, kNumSeats> final_order(const MiniGameState& state) {
  if (state.finished_order.size() < 3) throw std::logic_error("mini game not finished");
  std::array<int, kNumSeats> order{};
  std::array<bool, kNumSeats> seen{};
  for (int i = 0; i < 3; ++i) {
    order[i] = state.finished_order[i];
    seen[order[i]] = true;
  }
  for (int p = 0; p < kNumSeats; ++p) {
    if (!seen[p]) order[3] = p;
  }
  return order;
}

std::array<Standing, kNumSeats> standings(const MiniGameState& state) {
  const auto order = final_order(state);
  std::array<Standing, kNumSeats> out{};
  for (int i = 0; i < kNumSeats; ++i) out[order[i]] = static_cast<Standing>(i);
  return out;
}

Settlement settle(std::span<const int> order) {
  if (order.size() < 3) throw std::invalid_argument("settle needs the first three finishers");
  const int banker = order[0];
  const int mate = teammate_of(banker);
  int upgrade = 1;  // teammate is the dweller
  if (order[1] == mate) upgrade = 3;
  else if (order[2] == mate) upgrade = 2;
  return {team_of(banker), upgrade};
}

Score score(int level_diff) {
  if (level_diff < 0 || level_diff > 14) {
    throw std::out_of_range("level difference out of range: " + std::to_string(level_diff));
  }
  return {14 + level_diff, 14 - level_diff};
}

CardId tribute_card(const CardSet& hand, Level level) {
  CardId best = -1;
  int best_key = -1;
  hand.for_each([&](CardId id) {
    if (is_wild_id(id, level)) return;
    const int key = single_rank_ordinal(card_rank(id), level);
    if (key > best_key) {
      best_key = key;
      best = id;
    }
  });
  if (best < 0) throw std::invalid_argument("no non-wild card to donate");
  return best;
}

CardId return_card(const CardSet& hand, Level level) {
  CardId best = -1;
  std::tuple<int, int, int> best_key{3, 99, 0};
  hand.for_each([&](CardId id) {
    const Rank r = card_rank(id);
    const int tier = (!is_joker(r) && r <= Rank::kTen) ? (is_wild_id(id, level) ? 1 : 0) : 2;
    const std::tuple<int, int, int> key{tier, single_rank_ordinal(r, level), id};
    if (key < best_key) {
      best_key = key;
      best = id;
    }
  });
  if (best < 0) throw std::invalid_argument("empty hand cannot return a card");
  return best;
}

TributeRecord tribute(std::span<const int> prev_order, std::array<CardSet, kNumSeats>& hands,
                      const std::array<Level, 2>& team_levels) {
  if (prev_order.size() != kNumSeats) throw std::invalid_argument("tribute needs a full finishing order");
  const int banker = prev_order[0];
  const int follower = prev_order[1];
  const int third = prev_order[2];
  const int dweller = prev_order[3];
  const bool double_tribute = team_of(banker) == team_of(follower);

  std::vector<int> donors = double_tribute ? std::vector<int>{third, dweller} : std::vector<int>{dweller};
  CardSet loser_cards;
  for (int d : donors) loser_cards |= hands[d];
  int red_jokers = 0;
  loser_cards.for_each([&](CardId id) { red_jokers += card_rank(id) == Rank::kRedJoker ? 1 : 0; });

  TributeRecord rec;
  if (red_jokers == 2) {
    rec.denied = true;
    rec.leader = banker;
    rec.level = team_levels[team_of(banker)];
    return rec;
  }
  // Donors are on the losing team; their level is in force once they lead.
  const Level level = team_levels[team_of(dweller)];
  rec.level = level;
  if (!double_tribute) {
    rec.donations.push_back({dweller, banker, tribute_card(hands[dweller], level)});
  } else {
    const CardId a = tribute_card(hands[third], level);
    const CardId b = tribute_card(hands[dweller], level);
    const int ka = single_rank_ordinal(card_rank(a), level);
    const int kb = single_rank_ordinal(card_rank(b), level);
    if (ka == kb) {
      // Each donor gives to the recipient sitting farthest clockwise.
      rec.donations.push_back({third, (third + 3) % 4, a});
      rec.donations.push_back({dweller, (dweller + 3) % 4, b});
    } else if (ka > kb) {
      rec.donations.push_back({third, banker, a});
      rec.donations.push_back({dweller, follower, b});
    } else {
      rec.donations.push_back({dweller, banker, b});
      rec.donations.push_back({third, follower, a});
    }
  }
  for (const Transfer& t : rec.donations) {
    hands[t.from].erase(t.card);
    hands[t.to].insert(t.card);
    if (t.to == banker) rec.leader = t.from;
  }
  for (const Transfer& t : rec.donations) {
    const CardId back = return_card(hands[t.to], level);
    hands[t.to].erase(back);
    hands[t.from].insert(back);
    rec.returns.push_back({t.to, t.from, back});
  }
  return rec;
}

GameState advance_game(GameState game, std::span<const int> order) {
  if (game.over) throw std::logic_error("game already over");
  const Settlement st = settle(order);
  ++game.mini_games;
  if (order.size() == kNumSeats) {
    std::array<int, kNumSeats> full{};
    std::copy(order.begin(), order.end(), full.begin());
    game.previous_order = full;
  }
  Level& lvl = game.levels[st.winning_team];
  if (lvl.rank() == Rank::kAce && st.upgrade >= 2) {
    game.over = true;
    game.winner = st.winning_team;
    return game;
  }
  const int raised = std::min(rank_index(Rank::kAce), rank_index(lvl.rank()) + st.upgrade);
  lvl = Level(rank_from_index(raised));
  return game;
}

}  // namespace guanzero
