#include "guanzero/agents.h"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <tuple>

namespace guanzero {

namespace {

int wilds_in(const Combo& c, Level level) {
  int n = 0;
  c.cards.for_each([&](CardId id) { n += is_wild_id(id, level) ? 1 : 0; });
  return n;
}

// Cheapest-first key among combos of one kind: rank, then fewest wilds spent.
auto cost_key(const Combo& c, Level level) {
  return std::make_tuple(bomb_tier(c), c.rank, wilds_in(c, level), c.cards);
}

}  // namespace

std::size_t RandomAgent::choose(const MiniGameState&, std::span<const Action> legal, Rng& rng) {
  if (legal.empty()) throw std::invalid_argument("no legal actions");
  return static_cast<std::size_t>(rng.uniform(legal.size()));
}

std::size_t RuleAgent::choose(const MiniGameState& s, std::span<const Action> legal, Rng&) {
  if (legal.empty()) throw std::invalid_argument("no legal actions");
  const Level level = s.level;
  std::size_t best = legal.size();
  auto better = [&](std::size_t i, auto key_fn) {
    return best == legal.size() || key_fn(*legal[i].combo) < key_fn(*legal[best].combo);
  };

  if (s.leading()) {
    // Largest non-bomb first, lowest rank within that size.
    auto lead_key = [&](const Combo& c) {
      return std::make_tuple(-c.size(), c.rank, static_cast<int>(c.type), wilds_in(c, level), c.cards);
    };
    for (std::size_t i = 0; i < legal.size(); ++i) {
      if (!is_bomb_type(legal[i].combo->type) && better(i, lead_key)) best = i;
    }
    if (best == legal.size()) {
      auto bomb_key = [&](const Combo& c) { return cost_key(c, level); };
      for (std::size_t i = 0; i < legal.size(); ++i) {
        if (better(i, bomb_key)) best = i;
      }
    }
    return best;
  }

  const bool teammate_owns = team_of(s.table_owner) == team_of(s.current);
  auto key = [&](const Combo& c) { return cost_key(c, level); };
  for (std::size_t i = 0; i < legal.size(); ++i) {
    if (!legal[i].is_pass() && !is_bomb_type(legal[i].combo->type) && better(i, key)) best = i;
  }
  if (best == legal.size() && !teammate_owns && s.hands[s.table_owner].size() <= 5) {
    for (std::size_t i = 0; i < legal.size(); ++i) {
      if (!legal[i].is_pass() && better(i, key)) best = i;
    }
  }
  if (best != legal.size()) return best;
  for (std::size_t i = 0; i < legal.size(); ++i) {
    if (legal[i].is_pass()) return i;
  }
  return 0;
}

std::size_t argmax_action(std::span<const float> q, std::span<const Action> legal) {
  if (q.empty() || q.size() != legal.size()) throw std::invalid_argument("Q and legal sizes differ");
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best] || (q[i] == q[best] && legal[i].cards() < legal[best].cards())) best = i;
  }
  return best;
}

DmcAgent::DmcAgent(std::shared_ptr<const Snapshot> snapshot, bool use_flags)
    : snapshot_(std::move(snapshot)), use_flags_(use_flags) {
  if (!snapshot_) throw std::invalid_argument("dmc agent needs a snapshot");
}

std::vector<float> DmcAgent::evaluate(const MiniGameState& state, std::span<const Action> legal) {
  const auto d = encode_decision(state, legal, use_flags_);
  return scorer_.score((*snapshot_)[state.position_of(state.current)], d, legal);
}

std::size_t DmcAgent::choose(const MiniGameState& state, std::span<const Action> legal, Rng&) {
  if (legal.size() == 1) return 0;
  const auto q = evaluate(state, legal);
  return argmax_action(q, legal);
}

namespace {

std::string hand_string(const CardSet& hand, Level level) {
  auto ids = hand.ids();
  std::stable_sort(ids.begin(), ids.end(), [&](CardId a, CardId b) {
    return single_rank_ordinal(card_rank(a), level) < single_rank_ordinal(card_rank(b), level);
  });
  std::string out;
  for (CardId id : ids) {
    if (!out.empty()) out += ' ';
    out += card_name(id);
  }
  return out;
}

}  // namespace

std::size_t HumanAgent::choose(const MiniGameState& s, std::span<const Action> legal, Rng&) {
  out_ << "\nseat " << s.current << " (level " << rank_name(s.level.rank()) << ")\n";
  out_ << "hand: " << hand_string(s.hands[s.current], s.level) << "\n";
  for (int p = 0; p < kNumSeats; ++p) {
    if (p != s.current) out_ << "  seat " << p << ": " << s.hands[p].size() << " cards\n";
  }
  if (s.table) out_ << "table: " << to_string(*s.table) << " by seat " << s.table_owner << "\n";
  else out_ << "you lead\n";
  for (std::size_t i = 0; i < legal.size(); ++i) out_ << "  [" << i << "] " << to_string(legal[i]) << "\n";
  std::string line;
  while (true) {
    out_ << "choose> " << std::flush;
    if (!std::getline(in_, line)) throw AgentAbort("input closed");
    line.erase(0, line.find_first_not_of(" \t"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line == "pass") {
      for (std::size_t i = 0; i < legal.size(); ++i) {
        if (legal[i].is_pass()) return i;
      }
      out_ << "pass is not legal when leading\n";
      continue;
    }
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), idx);
    if (ec == std::errc() && ptr == line.data() + line.size() && !line.empty() && idx < legal.size()) return idx;
    out_ << "enter an index between 0 and " << legal.size() - 1 << (s.leading() ? "" : " or 'pass'") << "\n";
  }
}

namespace {

const std::regex& ckpt_pattern() {
  static const std::regex re(R"(p([1-4])_([0-9]+)\.ckpt)");
  return re;
}

std::map<long long, int> frames_by_count(const std::filesystem::path& dir) {
  std::map<long long, int> seen;  // frames -> bitmask of positions
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return seen;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, ckpt_pattern())) {
      seen[std::stoll(m[2])] |= 1 << (std::stoi(m[1]) - 1);
    }
  }
  return seen;
}

}  // namespace

std::vector<long long> available_frames(const std::filesystem::path& dir) {
  std::vector<long long> out;
  for (auto [frames, mask] : frames_by_count(dir)) {
    if (mask == 0xf) out.push_back(frames);
  }
  return out;
}

long long latest_common_frames(const std::filesystem::path& dir) {
  const auto all = available_frames(dir);
  return all.empty() ? -1 : all.back();
}

std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& dir, long long frames) {
  auto snap = std::make_shared<Snapshot>();
  for (int p = 0; p < kNumSeats; ++p) {
    (*snap)[p] = load_checkpoint(dir / ("p" + std::to_string(p + 1) + "_" + std::to_string(frames) + ".ckpt"));
  }
  for (int p = 1; p < kNumSeats; ++p) {
    if (!((*snap)[p].shape() == (*snap)[0].shape())) throw CheckpointError("position networks differ in shape");
  }
  return snap;
}

AgentSpec parse_agent_spec(const std::string& text) {
  AgentSpec spec;
  spec.text = text;
  if (text == "random" || text == "rule" || text == "human") {
    spec.kind = text;
    return spec;
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw AgentSpecError("unknown agent spec '" + text + "'");
  spec.kind = text.substr(0, colon);
  if (spec.kind != "dmc" && spec.kind != "dmc-noflags") throw AgentSpecError("unknown agent kind '" + spec.kind + "'");
  std::string rest = text.substr(colon + 1);
  const auto at = rest.rfind('@');
  if (at != std::string::npos) {
    const std::string f = rest.substr(at + 1);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size() || v < 0) {
      throw AgentSpecError("bad frame count in '" + text + "'");
    }
    spec.frames = v;
    rest = rest.substr(0, at);
  }
  if (rest.empty()) throw AgentSpecError("missing checkpoint directory in '" + text + "'");
  spec.dir = rest;
  return spec;
}

AgentFactory::AgentFactory(const std::string& spec, std::istream* in, std::ostream* out)
    : spec_(parse_agent_spec(spec)), in_(in), out_(out) {
  if (spec_.kind == "dmc" || spec_.kind == "dmc-noflags") {
    long long frames = spec_.frames;
    if (frames < 0) frames = latest_common_frames(spec_.dir);
    if (frames < 0) throw CheckpointError("no complete checkpoint set in " + spec_.dir.string());
    spec_.frames = frames;
    snapshot_ = load_snapshot(spec_.dir, frames);
  }
  if (spec_.kind == "human" && (!in_ || !out_)) throw AgentSpecError("human agent needs a terminal");
}

std::unique_ptr<Agent> AgentFactory::make() const {
  if (spec_.kind == "random") return std::make_unique<RandomAgent>();
  if (spec_.kind == "rule") return std::make_unique<RuleAgent>();
  if (spec_.kind == "human") return std::make_unique<HumanAgent>(*in_, *out_);
  return std::make_unique<DmcAgent>(snapshot_, spec_.kind == "dmc");
}

}  // namespace guanzero
