// guanzero: deck generation, training, evaluation, terminal play and replay
// inspection.
//
// Exit codes: 0 ok, 2 usage, 3 I/O, 4 validation.

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "guanzero/evalharness.h"
#include "guanzero/replay.h"
#include "guanzero/trainer.h"
#include "guanzero/version.h"

namespace gz = guanzero;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

// ---- gen-decks

struct GenDecksArgs {
  int n = 1000;
  std::uint64_t seed = 42;
  std::string out;
};

int cmd_gen_decks(const GenDecksArgs& a) {
  if (a.n < 1) throw UsageError("--n must be at least 1");
  try {
    gz::gen_decks(a.n, a.seed, a.out);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  std::cout << "wrote " << a.n << " decks to " << a.out << " (hash "
            << gz::hex64(gz::deck_hash(gz::load_decks(a.out))) << ")\n";
  return 0;
}

// ---- train

struct TrainArgs {
  gz::TrainerConfig cfg;
  bool no_flags = false;
  bool deterministic = false;
  bool resume = false;
};

int cmd_train(TrainArgs a) {
  a.cfg.behavior_flags = !a.no_flags;
  if (a.deterministic) {
    a.cfg.wall_clock = false;
    a.cfg.threaded = false;
  }
  try {
    a.cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "training " << a.cfg.run_dir().string() << " config " << gz::hex64(gz::config_hash(a.cfg))
            << (a.cfg.behavior_flags ? "" : " (behavior flags off)") << "\n";
  gz::TrainResult r;
  try {
    r = gz::train(a.cfg, a.resume, &g_stop);
  } catch (const gz::ResumeConflict& e) {
    throw ValidationError(e.what());
  } catch (const gz::CheckpointError& e) {
    throw IoError(e.what());
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  std::cout << "frames " << r.frames << ", episodes " << r.episodes << ", checkpoints";
  for (auto f : r.checkpoints) std::cout << ' ' << f;
  std::cout << (g_stop ? " (interrupted)" : "") << "\n";
  return 0;
}

// ---- eval

struct EvalArgs {
  gz::MatchConfig match;
  std::string decks;
  std::string report;
  std::string curve;
  bool no_swap = false;
  bool full_game = false;
};

int cmd_eval(EvalArgs a) {
  a.match.swap = !a.no_swap;
  a.match.level_mode = a.full_game ? gz::LevelMode::kFullGame : gz::LevelMode::kFixed;
  gz::DeckFile decks;
  try {
    decks = gz::load_decks(a.decks);
  } catch (const gz::DeckFileError& e) {
    throw ValidationError(e.what());
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  try {
    a.match.validate(decks);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::unique_ptr<gz::AgentFactory> fa, fb;
  try {
    fa = std::make_unique<gz::AgentFactory>(a.match.team_a, &std::cin, &std::cout);
    fb = std::make_unique<gz::AgentFactory>(a.match.team_b, &std::cin, &std::cout);
  } catch (const gz::AgentSpecError& e) {
    throw UsageError(e.what());
  } catch (const gz::CheckpointError& e) {
    throw IoError(e.what());
  }
  if (!a.curve.empty()) {
    const auto& spec = fa->spec();
    if (spec.kind != "dmc" && spec.kind != "dmc-noflags") throw UsageError("--curve needs a dmc team A");
    const auto frames = gz::available_frames(spec.dir);
    const auto curve = gz::wr_curve(spec.dir, spec.kind, frames, a.match.team_b, a.match, decks);
    std::ofstream out(a.curve);
    if (!out) throw IoError("cannot write " + a.curve);
    gz::write_curve_csv(out, curve);
    gz::write_curve_csv(std::cout, curve);
    return 0;
  }
  const gz::MatchReport r = gz::run_match(a.match, decks, *fa, *fb);
  const auto j = gz::report_json(a.match, decks, r);
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + a.report);
  }
  auto pct = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("-"); };
  std::cout << a.match.team_a << " vs " << a.match.team_b << " over " << a.match.n_games << " decks\n"
            << "  wr as team A: " << pct(r.wr_as_team_a) << " (" << r.wins_a << "/" << r.games_a << ")\n"
            << "  wr as team B: " << pct(r.wr_as_team_b) << " (" << r.wins_b << "/" << r.games_b << ")\n";
  for (int t = 0; t < 2; ++t) {
    std::cout << "  team " << (t == 0 ? 'A' : 'B') << " rates:";
    for (gz::Behavior b : {gz::Behavior::kCooperating, gz::Behavior::kDwarfing, gz::Behavior::kAssisting}) {
      std::cout << ' ' << gz::behavior_name(b) << '=' << pct(gz::try_rate(r.behavior[t][b])) << " ("
                << r.behavior[t][b].opportunities << ")";
    }
    std::cout << '\n';
  }
  if (!r.valid) {
    std::cerr << "match aborted: " << r.error << "\n";
    return kExitValidation;
  }
  return 0;
}

// ---- play

struct PlayArgs {
  std::string opponents = "rule";
  int seat = 0;
  std::uint64_t seed = 0;
  std::string log = "play.jsonl";
};

int cmd_play(const PlayArgs& a) {
  if (a.seat < 0 || a.seat > 3) throw UsageError("--seat must be 0..3");
  std::unique_ptr<gz::AgentFactory> opp;
  try {
    opp = std::make_unique<gz::AgentFactory>(a.opponents);
  } catch (const gz::AgentSpecError& e) {
    throw UsageError(e.what());
  } catch (const gz::CheckpointError& e) {
    throw IoError(e.what());
  }
  if (opp->spec().kind == "human") throw UsageError("opponents cannot be human");
  std::array<std::unique_ptr<gz::Agent>, gz::kNumSeats> agents;
  for (int p = 0; p < gz::kNumSeats; ++p) {
    agents[p] = p == a.seat ? std::make_unique<gz::HumanAgent>(std::cin, std::cout) : opp->make();
  }
  const gz::MiniGameState initial = gz::start_mini_game(gz::deal(a.seed));
  gz::MiniGameState s = initial;
  gz::Rng rng(gz::mix_seed(a.seed, 0x91a7));
  std::cout << "you are seat " << a.seat << ", partner seat " << (a.seat + 2) % 4 << "; seat " << s.leader
            << " leads\n";
  try {
    while (!s.done()) {
      const auto legal = gz::legal_actions(s);
      const int p = s.current;
      const std::size_t pick = agents[p]->choose(s, legal, rng);
      if (p != a.seat) std::cout << "seat " << p << ": " << gz::to_string(legal[pick]) << "\n";
      gz::apply_in_place(s, legal[pick]);
    }
  } catch (const gz::AgentAbort&) {
    std::cout << "\ninput closed; game abandoned\n";
    return 0;
  }
  const auto order = gz::final_order(s);
  const auto st = gz::settle(order);
  std::cout << "standings:";
  for (int p : order) std::cout << ' ' << p;
  std::cout << "\nteam " << st.winning_team << " wins (+" << st.upgrade << "); you "
            << (gz::team_of(a.seat) == st.winning_team ? "win" : "lose") << "\n";
  std::ofstream log(a.log, std::ios::app);
  if (!log) throw IoError("cannot append to " + a.log);
  gz::write_replay(log, initial, s,
                   {{"code_version", gz::kCodeVersion},
                    {"source", "play"},
                    {"seed", a.seed},
                    {"human_seat", a.seat},
                    {"opponents", a.opponents}});
  std::cout << "appended to " << a.log << "\n";
  return 0;
}

// ---- replay

struct ReplayArgs {
  std::string log;
  bool check = false;
  bool behavior = false;
};

char status_char(gz::BehaviorStatus s) {
  switch (s) {
    case gz::BehaviorStatus::kCannot: return '-';
    case gz::BehaviorStatus::kChooses: return 'y';
    case gz::BehaviorStatus::kRefuses: return 'n';
  }
  return '?';
}

int cmd_replay(const ReplayArgs& a) {
  std::ifstream in(a.log);
  if (!in) throw IoError("cannot open " + a.log);
  std::vector<gz::ReplayLog> logs;
  try {
    logs = gz::read_replays(in);
  } catch (const gz::ReplayError& e) {
    throw ValidationError(e.what());
  }
  bool ok = true;
  for (std::size_t g = 0; g < logs.size(); ++g) {
    const auto& log = logs[g];
    const std::string tag = logs.size() > 1 ? "game " + std::to_string(g) + ": " : "";
    if (a.behavior) {
      gz::MiniGameState s = gz::replay_initial_state(log);
      std::cout << tag << "step seat action coop dwarf assist\n";
      for (std::size_t i = 0; i < log.actions.size() && !s.done(); ++i) {
        const auto& e = log.actions[i];
        if (e.seat != s.current) break;
        const auto legal = gz::legal_actions(s);
        const auto flags = gz::behavior_flags(gz::behavior_context(s, legal), e.action);
        std::cout << i << ' ' << e.seat << ' ' << gz::to_string(e.action) << ' ' << status_char(flags.cooperating)
                  << ' ' << status_char(flags.dwarfing) << ' ' << status_char(flags.assisting) << '\n';
        if (std::find(legal.begin(), legal.end(), e.action) == legal.end()) break;
        gz::apply_in_place(s, e.action);
      }
    }
    if (a.check || !a.behavior) {
      const auto c = gz::check_replay(log);
      std::cout << tag << (c.ok ? "OK" : "DIVERGED at step " + std::to_string(c.divergence_step) + ": " + c.message)
                << "\n";
      ok = ok && c.ok;
    }
  }
  return ok ? 0 : kExitValidation;
}

// `sub --config FILE ...` becomes `sub --key=value ... ...`: file values come
// first so explicit flags (take-last) override them.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t width = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      width = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      width = 1;
    } else {
      continue;
    }
    if (!fs::exists(path)) throw IoError("cannot open config file " + path);
    std::vector<std::string> expanded;
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      std::string key = item.name;
      std::replace(key.begin(), key.end(), '_', '-');
      std::string value;
      for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
      expanded.push_back("--" + key + "=" + value);
    }
    args.erase(args.begin() + i, args.begin() + i + width);
    // Insert right after the subcommand name.
    std::size_t at = 1;
    while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
    args.insert(args.begin() + std::min(at + 1, args.size()), expanded.begin(), expanded.end());
    break;
  }
  return args;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guanzero " + std::string(gz::kCodeVersion) + ": Guandan self-play training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gz::kCodeVersion));
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenDecksArgs gd;
  auto* gen = app.add_subcommand("gen-decks", "write a file of seeded random decks");
  gen->add_option("--n", gd.n, "number of decks")->capture_default_str();
  gen->add_option("--seed", gd.seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gd.out, "output path")->required();

  TrainArgs ta;
  auto& tc = ta.cfg;
  auto* train = app.add_subcommand("train", "run the actor-learner loop");
  std::string config_file;
  train->add_option("--config", config_file, "key = value file (keys are flag names); flags override it");
  train->add_option("--frames", tc.frames, "learner budget in transitions")->capture_default_str();
  train->add_option("--out-dir", tc.out_dir, "directory holding run directories")->capture_default_str();
  train->add_option("--run-id", tc.run_id, "run directory name")->capture_default_str();
  train->add_flag("--no-behavior-flags", ta.no_flags, "ablation: zero the behavior features");
  train->add_option("--epsilon", tc.epsilon)->capture_default_str();
  train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train->add_option("--lr", tc.lr)->capture_default_str();
  train->add_option("--momentum", tc.momentum)->capture_default_str();
  train->add_option("--sync-interval", tc.sync_interval, "episodes between snapshot publications")
      ->capture_default_str();
  train->add_option("--buffer-capacity", tc.buffer_capacity, "transitions per position")->capture_default_str();
  train->add_option("--shuffle-pool", tc.shuffle_pool, "learner draws batches at random from this many transitions (0 = FIFO)")->capture_default_str();
  train->add_option("--actors", tc.actor_count)->capture_default_str();
  train->add_flag("--threaded,!--single-thread", tc.threaded, "actors on their own threads")->capture_default_str();
  train->add_option("--seed", tc.seed)->capture_default_str();
  train->add_option("--checkpoint-interval", tc.checkpoint_interval)->capture_default_str();
  train->add_option("--log-interval", tc.log_interval)->capture_default_str();
  train->add_flag("--full-game", tc.full_game, "train on successive mini games with tribute");
  train->add_option("--replay-interval", tc.replay_interval, "log every n-th episode; 0 = never")
      ->capture_default_str();
  train->add_option("--hidden", tc.shape.hidden)->capture_default_str();
  train->add_option("--width", tc.shape.width)->capture_default_str();
  train->add_flag("--deterministic", ta.deterministic, "single thread, wall_s = 0: byte-stable outputs");
  train->add_flag("--resume", ta.resume, "continue from the newest checkpoint set");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "paired-deck match between two agents");
  eval->add_option("--config", config_file, "key = value file (keys are flag names); flags override it");
  eval->add_option("--team-a", ea.match.team_a, "agent spec")->capture_default_str();
  eval->add_option("--team-b", ea.match.team_b, "agent spec")->capture_default_str();
  eval->add_option("--decks", ea.decks, "deck file")->required();
  eval->add_option("--games", ea.match.n_games)->capture_default_str();
  eval->add_flag("--no-swap", ea.no_swap, "play only the unswapped seating");
  eval->add_flag("--full-game", ea.full_game, "carry levels and tribute across decks");
  eval->add_option("--seed", ea.match.seed, "seed for stochastic agents")->capture_default_str();
  eval->add_option("--threads", ea.match.threads)->capture_default_str();
  eval->add_option("--report", ea.report, "report JSON path");
  eval->add_option("--curve", ea.curve, "CSV of WR for every checkpoint of team A");

  PlayArgs pa;
  auto* play = app.add_subcommand("play", "play one mini game at the terminal");
  play->add_option("--opponents", pa.opponents, "agent spec for the other three seats")->capture_default_str();
  play->add_option("--seat", pa.seat)->capture_default_str();
  play->add_option("--seed", pa.seed, "deal seed")->capture_default_str();
  play->add_option("--log", pa.log, "replay log to append to")->capture_default_str();

  ReplayArgs ra;
  auto* replay = app.add_subcommand("replay", "re-simulate and verify a replay log");
  replay->add_option("--log", ra.log)->required();
  replay->add_flag("--check", ra.check, "verify legality and standings");
  replay->add_flag("--behavior", ra.behavior, "print behavior statuses per decision");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dynamic_cast<const IoError*>(&e) ? kExitIo : kExitUsage;
  }
  try {
    // CLI11 takes the arguments reversed, without the program name.
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  if (*gen) return guarded([&] { return cmd_gen_decks(gd); });
  if (*train) return guarded([&] { return cmd_train(ta); });
  if (*eval) return guarded([&] { return cmd_eval(ea); });
  if (*play) return guarded([&] { return cmd_play(pa); });
  if (*replay) return guarded([&] { return cmd_replay(ra); });
  return kExitUsage;
}
