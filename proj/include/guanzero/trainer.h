#ifndef GUANZERO_TRAINER_H_
#define GUANZERO_TRAINER_H_

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "guanzero/agents.h"
#include "guanzero/behavior.h"
#include "guanzero/engine.h"
#include "guanzero/valuenet.h"
#include "json.hpp"

namespace guanzero {

struct TrainerConfig {
  double epsilon = 0.01;
  int batch_size = 32;
  double lr = 1e-4;
  double momentum = 0.9;
  int sync_interval = 10;        // episodes between snapshot publications
  int buffer_capacity = 50000;   // transitions per position
  int shuffle_pool = 4096;       // learner draws batches at random from this many; 0 = plain FIFO
  int actor_count = 4;
  bool threaded = false;         // false: one actor interleaved with the learner
  std::uint64_t seed = 1;
  long long frames = 200000;     // learner budget in transitions consumed
  long long checkpoint_interval = 50000;
  long long log_interval = 5000;
  bool behavior_flags = true;
  bool full_game = false;        // episodes are successive mini games of full games
  bool wall_clock = true;        // false writes wall_s = 0 so metrics are byte-stable
  long long replay_interval = 0; // write every n-th episode's replay log; 0 = never
  NetShape shape;
  std::string run_id = "run";
  std::filesystem::path out_dir = "runs";

  void validate() const;  // throws std::invalid_argument
  std::filesystem::path run_dir() const { return out_dir / run_id; }
};

nlohmann::json to_json(const TrainerConfig& c);
// Hash of the settings that shape the learning run (not the budget or paths).
std::uint64_t config_hash(const TrainerConfig& c);
std::string hex64(std::uint64_t v);

// One (state, action, return) record, bit-packed: flat | history | action.
inline constexpr int kPackedBits = kFlatDim + kHistoryDim + kActionDim;
inline constexpr int kPackedWords = (kPackedBits + 63) / 64;

struct Transition {
  std::array<std::uint64_t, kPackedWords> bits{};
  float g = 0.0f;
  friend bool operator==(const Transition&, const Transition&) = default;
};

// Packs the decision's shared state, the chosen candidate's flags (when
// enabled) and its cards.
Transition pack_transition(const DecisionFeatures& d, std::size_t chosen, const Action& action);
Transition pack_transition(const StateFeatures& s, const ActionFeatures& a);
void unpack_transition(const Transition& t, Batch& batch, int i);

struct Episode {
  std::array<std::vector<Transition>, kNumSeats> transitions;  // by position
  MiniGameState initial;
  MiniGameState final_state;
  std::array<int, kNumSeats> order{};
  Settlement settlement;
  BehaviorCounters counters;  // all four seats, chosen actions
};

// Plays one mini game from `initial` with epsilon-greedy choices from the
// per-position networks and stamps +u / -u on every transition.
Episode run_episode(const Snapshot& snapshots, const MiniGameState& initial, Rng& rng, double epsilon,
                    bool behavior_flags);

// Bounded FIFO for one position. Producers block while full.
class PositionBuffer {
 public:
  explicit PositionBuffer(std::size_t capacity) : capacity_(capacity) {}
  // Returns false if the buffer was closed while waiting.
  bool push(Transition t);
  // Moves exactly n transitions into `out` if available; never blocks.
  bool try_pop(std::size_t n, std::vector<Transition>& out);
  // Appends up to `max` transitions to `out`; returns how many. Never blocks.
  std::size_t drain(std::size_t max, std::vector<Transition>& out);
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t produced() const;
  std::uint64_t consumed() const;
  void close();

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::deque<Transition> items_;
  std::uint64_t produced_ = 0;
  std::uint64_t consumed_ = 0;
  bool closed_ = false;
};

// Publication point for parameter snapshots: readers get either the old or
// the new set of all four networks, never a mix.
class SnapshotStore {
 public:
  void publish(std::shared_ptr<const Snapshot> snap);
  std::shared_ptr<const Snapshot> get() const;
  std::uint64_t version() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> current_;
  std::uint64_t version_ = 0;
};

// Produces successive episodes for one actor: its own deal stream and, in
// full-game mode, its own running game with tribute.
class Actor {
 public:
  Actor(const TrainerConfig& config, int id, std::uint64_t stream_offset = 0);
  Episode next(const Snapshot& snapshot);
  std::uint64_t episodes() const { return episodes_; }

 private:
  MiniGameState next_initial();
  const TrainerConfig& config_;
  int id_;
  std::uint64_t stream_;
  Rng rng_;
  std::uint64_t episodes_ = 0;
  GameState game_;
  std::optional<std::array<int, kNumSeats>> prev_order_;
};

struct LearnerStep {
  float mse = 0.0f;
  bool applied = false;
};

// One regression step of `net` toward the batch returns.
LearnerStep learner_step(ValueNet<float>& net, Sgd<float>& opt, const Batch& batch, float lr, float momentum,
                         ValueNet<float>& grads_scratch);

struct TrainResult {
  long long frames = 0;
  long long episodes = 0;
  std::vector<long long> checkpoints;  // frame counts saved
  BehaviorCounters counters;
};

class ResumeConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs the actor-learner loop until the frame budget is reached or `stop`
// becomes true. Writes run.json, metrics.jsonl and checkpoints under
// config.run_dir(). With `resume`, continues from the newest checkpoint set.
TrainResult train(const TrainerConfig& config, bool resume = false, const std::atomic<bool>* stop = nullptr);

}  // namespace guanzero

#endif  // GUANZERO_TRAINER_H_
