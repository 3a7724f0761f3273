#include "guanzero/replay.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace guanzero {

namespace {

using nlohmann::json;

json cards_json(const CardSet& cards) { return cards.ids(); }

CardSet cards_from(const json& j) {
  CardSet out;
  for (const auto& v : j) {
    const int id = v.get<int>();
    if (id < 0 || id >= kNumCards) throw std::out_of_range("card id out of range: " + std::to_string(id));
    if (out.contains(id)) throw std::invalid_argument("duplicate card id " + std::to_string(id));
    out.insert(id);
  }
  return out;
}

Level level_from(const json& j) {
  const std::string name = j.get<std::string>();
  for (int r = 0; r < 13; ++r) {
    if (rank_name(static_cast<Rank>(r)) == name) return Level(static_cast<Rank>(r));
  }
  throw std::invalid_argument("bad level '" + name + "'");
}

}  // namespace

json action_to_json(const Action& a) {
  if (a.is_pass()) return json{{"pass", true}};
  return json{{"combo", std::string(combo_type_name(a.combo->type))},
              {"rank", a.combo->rank},
              {"cards", cards_json(a.combo->cards)},
              {"text", to_string(*a.combo)}};
}

Action action_from_json(const json& j) {
  if (j.value("pass", false)) return Action::pass();
  const auto type = parse_combo_type(j.at("combo").get<std::string>());
  if (!type) throw std::invalid_argument("unknown combo type");
  Combo c;
  c.type = *type;
  c.rank = j.at("rank").get<int>();
  c.cards = cards_from(j.at("cards"));
  return Action::play(c);
}

void write_replay(std::ostream& os, const MiniGameState& initial, const MiniGameState& final_state,
                  const json& meta) {
  json header{{"type", "deal"},
              {"format_version", kReplayFormatVersion},
              {"leader", initial.leader},
              {"level", rank_name(initial.level.rank())},
              {"team_levels", {rank_name(initial.team_levels[0].rank()), rank_name(initial.team_levels[1].rank())}},
              {"meta", meta}};
  json hands = json::array();
  for (const auto& h : initial.hands) hands.push_back(cards_json(h));
  header["hands"] = hands;
  os << header.dump() << '\n';
  for (std::size_t i = initial.history.size(); i < final_state.history.size(); ++i) {
    const auto& e = final_state.history[i];
    json line{{"type", "action"}, {"step", i - initial.history.size()}, {"seat", e.seat}};
    line.update(action_to_json(e.action));
    os << line.dump() << '\n';
  }
  json result{{"type", "result"}};
  if (final_state.done()) {
    const auto order = final_order(final_state);
    const auto st = settle(order);
    result["order"] = order;
    result["winning_team"] = st.winning_team;
    result["upgrade"] = st.upgrade;
  } else {
    result["order"] = nullptr;
  }
  os << result.dump() << '\n';
}

ReplayLog read_replay(std::istream& is) {
  ReplayLog log;
  std::string text;
  int line_no = 0;
  bool have_header = false;
  bool have_result = false;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const json j = json::parse(text);
      const std::string type = j.at("type").get<std::string>();
      if (have_result) throw std::invalid_argument("content after the result line");
      if (type == "deal") {
        if (have_header) throw std::invalid_argument("second deal header");
        if (j.at("format_version").get<int>() != kReplayFormatVersion) {
          throw std::invalid_argument("unsupported replay format version");
        }
        const auto& hands = j.at("hands");
        if (hands.size() != kNumSeats) throw std::invalid_argument("deal must list four hands");
        for (int p = 0; p < kNumSeats; ++p) log.hands[p] = cards_from(hands[p]);
        log.leader = j.at("leader").get<int>();
        if (log.leader < 0 || log.leader >= kNumSeats) throw std::invalid_argument("bad leader seat");
        log.level = level_from(j.at("level"));
        log.team_levels = {level_from(j.at("team_levels")[0]), level_from(j.at("team_levels")[1])};
        log.meta = j.value("meta", json::object());
        have_header = true;
      } else if (type == "action") {
        if (!have_header) throw std::invalid_argument("action before the deal header");
        const int seat = j.at("seat").get<int>();
        if (seat < 0 || seat >= kNumSeats) throw std::invalid_argument("bad seat");
        log.actions.push_back({seat, action_from_json(j)});
      } else if (type == "result") {
        if (!have_header) throw std::invalid_argument("result before the deal header");
        if (!j.at("order").is_null()) {
          std::array<int, kNumSeats> order{};
          for (int i = 0; i < kNumSeats; ++i) order[i] = j.at("order").at(i).get<int>();
          log.order = order;
        }
        have_result = true;
      } else {
        throw std::invalid_argument("unknown line type '" + type + "'");
      }
    } catch (const ReplayError&) {
      throw;
    } catch (const std::exception& e) {
      throw ReplayError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  if (!have_header) throw ReplayError("missing deal header", line_no);
  return log;
}

std::vector<ReplayLog> read_replays(std::istream& is) {
  std::vector<std::pair<int, std::string>> chunks;  // first line number, text
  std::string text;
  int line_no = 0;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    const bool header = text.find("\"type\":\"deal\"") != std::string::npos;
    if (header || chunks.empty()) chunks.push_back({line_no, ""});
    chunks.back().second += text + '\n';
  }
  if (chunks.empty()) throw ReplayError("missing deal header", line_no);
  std::vector<ReplayLog> out;
  for (const auto& [first, body] : chunks) {
    std::istringstream one(body);
    try {
      out.push_back(read_replay(one));
    } catch (const ReplayError& e) {
      const int abs_line = first + e.line() - 1;
      std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) msg = msg.substr(msg.find(':') + 2);
      throw ReplayError("line " + std::to_string(abs_line) + ": " + msg, abs_line);
    }
  }
  return out;
}

MiniGameState replay_initial_state(const ReplayLog& log) {
  return start_mini_game(log.hands, log.leader, log.level, log.team_levels);
}

ReplayCheck check_replay(const ReplayLog& log) {
  ReplayCheck out;
  MiniGameState s = replay_initial_state(log);
  for (std::size_t i = 0; i < log.actions.size(); ++i) {
    const auto& e = log.actions[i];
    auto fail = [&](const std::string& why) {
      out.divergence_step = static_cast<int>(i);
      out.message = "step " + std::to_string(i) + ": " + why;
      out.final_state = s;
      return out;
    };
    if (s.done()) return fail("action after the mini game ended");
    if (e.seat != s.current) {
      return fail("seat " + std::to_string(e.seat) + " acted but seat " + std::to_string(s.current) + " was due");
    }
    const auto legal = legal_actions(s);
    if (std::find(legal.begin(), legal.end(), e.action) == legal.end()) {
      return fail(to_string(e.action) + " is not legal");
    }
    apply_in_place(s, e.action);
  }
  out.final_state = s;
  if (log.order) {
    if (!s.done()) {
      out.message = "log ends before the mini game finished";
      out.divergence_step = static_cast<int>(log.actions.size());
      return out;
    }
    if (final_order(s) != *log.order) {
      out.message = "recorded standings differ from the re-simulated ones";
      out.divergence_step = static_cast<int>(log.actions.size());
      return out;
    }
  }
  out.ok = true;
  out.message = "OK";
  return out;
}

}  // namespace guanzero
