#ifndef GUANZERO_AGENTS_H_
#define GUANZERO_AGENTS_H_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "guanzero/engine.h"
#include "guanzero/valuenet.h"

namespace guanzero {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  // Index into `legal`, which is legal_actions(state) for state.current.
  virtual std::size_t choose(const MiniGameState& state, std::span<const Action> legal, Rng& rng) = 0;
};

class RandomAgent : public Agent {
 public:
  std::string name() const override { return "random"; }
  std::size_t choose(const MiniGameState& state, std::span<const Action> legal, Rng& rng) override;
};

// Scripted stand-in opponent. Following: the cheapest non-bomb that beats the
// table; bombs only against an opponent owner holding <= 5 cards; never
// bombs a teammate. Leading: the lowest-ranked non-bomb of the largest size.
class RuleAgent : public Agent {
 public:
  std::string name() const override { return "rule"; }
  std::size_t choose(const MiniGameState& state, std::span<const Action> legal, Rng& rng) override;
};

// One network per position: p1 is the opening leader, then play order.
using Snapshot = std::array<ValueNet<float>, kNumSeats>;

// Greedy choice over Q with ties broken toward the lexicographically smallest
// action encoding, then the lowest index.
std::size_t argmax_action(std::span<const float> q, std::span<const Action> legal);

class DmcAgent : public Agent {
 public:
  DmcAgent(std::shared_ptr<const Snapshot> snapshot, bool use_flags);
  std::string name() const override { return use_flags_ ? "dmc" : "dmc-noflags"; }
  std::size_t choose(const MiniGameState& state, std::span<const Action> legal, Rng& rng) override;
  // Q estimates for every legal action.
  std::vector<float> evaluate(const MiniGameState& state, std::span<const Action> legal);
  const Snapshot& snapshot() const { return *snapshot_; }

 private:
  std::shared_ptr<const Snapshot> snapshot_;
  bool use_flags_;
  CandidateScorer<float> scorer_;
};

class AgentAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Terminal player: lists the legal actions with indices and reads a choice.
class HumanAgent : public Agent {
 public:
  HumanAgent(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  std::string name() const override { return "human"; }
  std::size_t choose(const MiniGameState& state, std::span<const Action> legal, Rng& rng) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

class AgentSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Checkpoints in `dir` named p<k>_<frames>.ckpt. Returns the largest frame
// count present for all four positions, or -1.
long long latest_common_frames(const std::filesystem::path& dir);
std::vector<long long> available_frames(const std::filesystem::path& dir);
std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& dir, long long frames);

// "random", "rule", "human", "dmc:<dir>[@frames]", "dmc-noflags:<dir>[@frames]".
struct AgentSpec {
  std::string kind;
  std::filesystem::path dir;
  long long frames = -1;  // -1: latest
  std::string text;
};
AgentSpec parse_agent_spec(const std::string& text);

// Builds agents for one spec; dmc snapshots are loaded once and shared.
class AgentFactory {
 public:
  explicit AgentFactory(const std::string& spec, std::istream* in = nullptr, std::ostream* out = nullptr);
  std::unique_ptr<Agent> make() const;
  const AgentSpec& spec() const { return spec_; }
  bool deterministic() const { return spec_.kind == "rule" || spec_.kind == "dmc" || spec_.kind == "dmc-noflags"; }

 private:
  AgentSpec spec_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::istream* in_;
  std::ostream* out_;
};

}  // namespace guanzero

#endif  // GUANZERO_AGENTS_H_
