#include "guanzero/trainer.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "guanzero/parallel.h"
#include "guanzero/replay.h"
#include "guanzero/version.h"

namespace guanzero {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void TrainerConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  need(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  need(batch_size >= 1, "batch_size must be positive");
  need(buffer_capacity >= batch_size, "buffer_capacity must be at least batch_size");
  need(shuffle_pool == 0 || shuffle_pool >= batch_size, "shuffle_pool must be 0 or at least batch_size");
  need(lr >= 0.0 && std::isfinite(lr), "lr must be a finite non-negative number");
  need(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  need(sync_interval >= 1, "sync_interval must be positive");
  need(actor_count >= 1, "actor_count must be positive");
  need(frames >= 0, "frames must be non-negative");
  need(checkpoint_interval >= 1, "checkpoint_interval must be positive");
  need(log_interval >= 1, "log_interval must be positive");
  need(replay_interval >= 0, "replay_interval must be non-negative");
  need(shape.hidden >= 1 && shape.width >= 1, "network widths must be positive");
  need(!run_id.empty() && run_id.find('/') == std::string::npos, "run_id must be a plain name");
}

json to_json(const TrainerConfig& c) {
  return json{{"epsilon", c.epsilon},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"momentum", c.momentum},
              {"sync_interval", c.sync_interval},
              {"buffer_capacity", c.buffer_capacity},
              {"shuffle_pool", c.shuffle_pool},
              {"actor_count", c.actor_count},
              {"threaded", c.threaded},
              {"seed", c.seed},
              {"frames", c.frames},
              {"checkpoint_interval", c.checkpoint_interval},
              {"log_interval", c.log_interval},
              {"behavior_flags", c.behavior_flags},
              {"full_game", c.full_game},
              {"wall_clock", c.wall_clock},
              {"replay_interval", c.replay_interval},
              {"hidden", c.shape.hidden},
              {"width", c.shape.width},
              {"run_id", c.run_id},
              {"out_dir", c.out_dir.string()}};
}

std::uint64_t config_hash(const TrainerConfig& c) {
  json j = to_json(c);
  for (const char* k : {"frames", "out_dir", "run_id", "wall_clock", "replay_interval", "checkpoint_interval",
                        "log_interval"}) {
    j.erase(k);
  }
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

inline void set_bit(Transition& t, int i) { t.bits[i >> 6] |= std::uint64_t{1} << (i & 63); }

constexpr int kHistoryBit = kFlatDim;
constexpr int kActionBit = kFlatDim + kHistoryDim;

}  // namespace

Transition pack_transition(const DecisionFeatures& d, std::size_t chosen, const Action& action) {
  Transition t;
  for (int i = 0; i < kFlatDim; ++i) {
    if (d.base.flat[i] != 0.0f) set_bit(t, i);
  }
  if (d.flags_enabled) {
    for (int p : flag_positions(d.flags.at(chosen))) set_bit(t, kFlagOffset + p);
  }
  for (int i = 0; i < kHistoryDim; ++i) {
    if (d.base.history[i] != 0.0f) set_bit(t, kHistoryBit + i);
  }
  if (!action.is_pass()) action.combo->cards.for_each([&](CardId id) { set_bit(t, kActionBit + id); });
  return t;
}

Transition pack_transition(const StateFeatures& s, const ActionFeatures& a) {
  Transition t;
  for (int i = 0; i < kFlatDim; ++i) {
    if (s.flat[i] != 0.0f) set_bit(t, i);
  }
  for (int i = 0; i < kHistoryDim; ++i) {
    if (s.history[i] != 0.0f) set_bit(t, kHistoryBit + i);
  }
  for (int i = 0; i < kActionDim; ++i) {
    if (a[i] != 0.0f) set_bit(t, kActionBit + i);
  }
  return t;
}

void unpack_transition(const Transition& t, Batch& batch, int i) {
  float* flat = batch.flat.data() + static_cast<std::size_t>(i) * kFlatDim;
  float* hist = batch.history.data() + static_cast<std::size_t>(i) * kHistoryDim;
  float* act = batch.action.data() + static_cast<std::size_t>(i) * kActionDim;
  std::fill(flat, flat + kFlatDim, 0.0f);
  std::fill(hist, hist + kHistoryDim, 0.0f);
  std::fill(act, act + kActionDim, 0.0f);
  for (int w = 0; w < kPackedWords; ++w) {
    std::uint64_t bits = t.bits[w];
    while (bits) {
      const int b = w * 64 + std::countr_zero(bits);
      bits &= bits - 1;
      if (b < kHistoryBit) flat[b] = 1.0f;
      else if (b < kActionBit) hist[b - kHistoryBit] = 1.0f;
      else act[b - kActionBit] = 1.0f;
    }
  }
  batch.target[i] = t.g;
}

Episode run_episode(const Snapshot& snapshots, const MiniGameState& initial, Rng& rng, double epsilon,
                    bool behavior_flags) {
  Episode ep;
  ep.initial = initial;
  MiniGameState s = initial;
  CandidateScorer<float> scorer;
  while (!s.done()) {
    const auto legal = legal_actions(s);
    const auto d = encode_decision(s, legal, behavior_flags);
    const int pos = s.position_of(s.current);
    std::size_t pick = 0;
    const double u = rng.uniform_real();
    if (legal.size() > 1) {
      if (u < epsilon) {
        pick = static_cast<std::size_t>(rng.uniform(legal.size()));
      } else {
        const auto q = scorer.score(snapshots[pos], d, legal);
        pick = argmax_action(q, legal);
      }
    }
    ep.counters.record(d.flags[pick]);
    ep.transitions[pos].push_back(pack_transition(d, pick, legal[pick]));
    apply_in_place(s, legal[pick]);
  }
  ep.final_state = s;
  ep.order = final_order(s);
  ep.settlement = settle(ep.order);
  for (int pos = 0; pos < kNumSeats; ++pos) {
    const int seat = (initial.leader + pos) % kNumSeats;
    const float g = static_cast<float>(team_of(seat) == ep.settlement.winning_team ? ep.settlement.upgrade
                                                                                      : -ep.settlement.upgrade);
    for (auto& t : ep.transitions[pos]) t.g = g;
  }
  return ep;
}

bool PositionBuffer::push(Transition t) {
  std::unique_lock lock(mu_);
  not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
  if (closed_) return false;
  items_.push_back(std::move(t));
  ++produced_;
  return true;
}

bool PositionBuffer::try_pop(std::size_t n, std::vector<Transition>& out) {
  {
    std::lock_guard lock(mu_);
    if (items_.size() < n) return false;
    out.assign(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.begin() + n));
    items_.erase(items_.begin(), items_.begin() + n);
    consumed_ += n;
  }
  not_full_.notify_all();
  return true;
}

std::size_t PositionBuffer::drain(std::size_t max, std::vector<Transition>& out) {
  std::size_t n = 0;
  {
    std::lock_guard lock(mu_);
    n = std::min(max, items_.size());
    out.insert(out.end(), std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.begin() + n));
    items_.erase(items_.begin(), items_.begin() + n);
    consumed_ += n;
  }
  if (n > 0) not_full_.notify_all();
  return n;
}

std::size_t PositionBuffer::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

std::uint64_t PositionBuffer::produced() const {
  std::lock_guard lock(mu_);
  return produced_;
}

std::uint64_t PositionBuffer::consumed() const {
  std::lock_guard lock(mu_);
  return consumed_;
}

void PositionBuffer::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  not_full_.notify_all();
}

void SnapshotStore::publish(std::shared_ptr<const Snapshot> snap) {
  std::lock_guard lock(mu_);
  current_ = std::move(snap);
  ++version_;
}

std::shared_ptr<const Snapshot> SnapshotStore::get() const {
  std::lock_guard lock(mu_);
  return current_;
}

std::uint64_t SnapshotStore::version() const {
  std::lock_guard lock(mu_);
  return version_;
}

Actor::Actor(const TrainerConfig& config, int id, std::uint64_t stream_offset)
    : config_(config),
      id_(id),
      stream_(mix_seed(config.seed, 0xac7, static_cast<std::uint64_t>(id) + (stream_offset << 16))),
      rng_(mix_seed(stream_, 0x5e1)) {
  game_.levels = {Level(Rank::kTwo), Level(Rank::kTwo)};
}

MiniGameState Actor::next_initial() {
  const Deal d = deal(mix_seed(stream_, 0xdea1, episodes_));
  if (!config_.full_game) return start_mini_game(d, Level(Rank::kTwo));
  if (game_.over) {
    game_ = GameState{};
    game_.levels = {Level(Rank::kTwo), Level(Rank::kTwo)};
    prev_order_.reset();
  }
  if (!prev_order_) return start_mini_game(d.hands, d.leader, game_.levels[team_of(d.leader)], game_.levels);
  auto hands = d.hands;
  const TributeRecord rec = tribute(*prev_order_, hands, game_.levels);
  return start_mini_game(hands, rec.leader, rec.level, game_.levels);
}

Episode Actor::next(const Snapshot& snapshot) {
  const MiniGameState initial = next_initial();
  Episode ep = run_episode(snapshot, initial, rng_, config_.epsilon, config_.behavior_flags);
  ++episodes_;
  if (config_.full_game) {
    game_ = advance_game(game_, ep.order);
    prev_order_ = ep.order;
  }
  return ep;
}

LearnerStep learner_step(ValueNet<float>& net, Sgd<float>& opt, const Batch& batch, float lr, float momentum,
                         ValueNet<float>& grads_scratch) {
  LearnerStep out;
  if (batch.n == 0) return out;
  out.mse = loss_and_grads(net, batch, grads_scratch);
  out.applied = opt.step(net, grads_scratch, lr, momentum);
  return out;
}

namespace {

std::string position_name(int p) { return "p" + std::to_string(p + 1); }

fs::path ckpt_path(const fs::path& dir, int p, long long frames, const char* ext) {
  return dir / (position_name(p) + "_" + std::to_string(frames) + ext);
}

json rate_or_null(const BehaviorCounter& c) {
  if (c.opportunities == 0) return nullptr;
  return rate(c);
}

// Shared state of one training run.
class Trainer {
 public:
  Trainer(const TrainerConfig& config, bool resume, const std::atomic<bool>* stop)
      : cfg_(config), resume_(resume), stop_(stop), dir_(config.run_dir()), start_(Clock::now()) {}

  TrainResult run();

 private:
  using Clock = std::chrono::steady_clock;

  double wall() const {
    if (!cfg_.wall_clock) return 0.0;
    return wall_offset_ + std::chrono::duration<double>(Clock::now() - start_).count();
  }
  void setup();
  void publish();
  void on_episode(Episode& ep, const Actor& actor, int actor_id);
  bool next_batch(int p);
  bool learn_available();
  void after_step(int pos, float mse);
  void log_metrics();
  void checkpoint();
  bool out_of_budget() const { return frames_ >= cfg_.frames || (stop_ && stop_->load()); }

  const TrainerConfig& cfg_;
  bool resume_;
  const std::atomic<bool>* stop_;
  fs::path dir_;
  Clock::time_point start_;
  double wall_offset_ = 0.0;

  std::array<ValueNet<float>, kNumSeats> nets_;
  std::array<Sgd<float>, kNumSeats> opts_;
  std::array<ValueNet<float>, kNumSeats> grads_;
  std::vector<std::unique_ptr<PositionBuffer>> buffers_;
  SnapshotStore store_;
  Batch batch_;
  std::vector<Transition> popped_;
  std::array<std::vector<Transition>, kNumSeats> pool_;
  Rng pool_rng_;

  long long frames_ = 0;
  std::atomic<long long> episodes_{0};
  long long episodes_at_publish_ = 0;
  long long next_log_ = 0;
  long long next_ckpt_ = 0;
  long long last_ckpt_ = -1;
  long long last_log_ = -1;
  std::array<double, kNumSeats> mse_sum_{};
  std::array<int, kNumSeats> mse_steps_{};
  std::mutex stats_mu_;
  BehaviorCounters window_;
  BehaviorCounters total_;
  std::ofstream metrics_;
  TrainResult result_;
};

void Trainer::setup() {
  cfg_.validate();
  fs::create_directories(dir_);
  const std::string hash = hex64(config_hash(cfg_));
  const fs::path run_json = dir_ / "run.json";
  const long long existing = latest_common_frames(dir_);
  if (resume_) {
    if (existing < 0) throw ResumeConflict("nothing to resume in " + dir_.string());
    std::ifstream in(run_json);
    if (!in) throw ResumeConflict("missing run.json in " + dir_.string());
    const json prev = json::parse(in);
    if (prev.value("config_hash", "") != hash) {
      throw ResumeConflict("configuration differs from the run being resumed (hash " +
                           prev.value("config_hash", std::string("?")) + " vs " + hash + ")");
    }
  } else if (existing >= 0) {
    throw ResumeConflict("run directory " + dir_.string() + " already holds checkpoints; resume or pick a new run id");
  }
  {
    ordered_json rj;
    rj["code_version"] = kCodeVersion;
    rj["config_hash"] = hash;
    rj["config"] = to_json(cfg_);
    std::ofstream out(run_json, std::ios::trunc);
    out << rj.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + run_json.string());
  }

  for (int p = 0; p < kNumSeats; ++p) {
    nets_[p] = ValueNet<float>::init(mix_seed(cfg_.seed, 0x9e7, p), cfg_.shape);
    opts_[p] = Sgd<float>(nets_[p].num_params());
    buffers_.push_back(std::make_unique<PositionBuffer>(cfg_.buffer_capacity));
  }
  if (resume_) {
    frames_ = existing;
    for (int p = 0; p < kNumSeats; ++p) {
      nets_[p] = load_checkpoint(ckpt_path(dir_, p, existing, ".ckpt"), cfg_.shape);
      const fs::path mom = ckpt_path(dir_, p, existing, ".momentum");
      if (fs::exists(mom)) {
        const auto v = load_checkpoint(mom, cfg_.shape);
        std::copy(v.params().begin(), v.params().end(), opts_[p].velocity().begin());
      }
    }
    std::ifstream side(ckpt_path(dir_, 0, existing, ".json"));
    if (side) {
      const json sj = json::parse(side);
      episodes_ = sj.value("episodes", 0LL);
      wall_offset_ = cfg_.wall_clock ? sj.value("wall_s", 0.0) : 0.0;
    }
    last_ckpt_ = existing;
    last_log_ = existing;
  }
  pool_rng_ = Rng(mix_seed(cfg_.seed, 0x9001, static_cast<std::uint64_t>(frames_)));
  episodes_at_publish_ = episodes_;
  next_log_ = (frames_ / cfg_.log_interval + 1) * cfg_.log_interval;
  next_ckpt_ = (frames_ / cfg_.checkpoint_interval + 1) * cfg_.checkpoint_interval;
  metrics_.open(dir_ / "metrics.jsonl", resume_ ? std::ios::app : std::ios::trunc);
  if (!metrics_) throw std::runtime_error("cannot open metrics.jsonl");
  if (cfg_.replay_interval > 0) fs::create_directories(dir_ / "replays");
  publish();
}

void Trainer::publish() {
  store_.publish(std::make_shared<const Snapshot>(nets_));
  episodes_at_publish_ = episodes_;
}

void Trainer::on_episode(Episode& ep, const Actor& actor, int actor_id) {
  std::lock_guard lock(stats_mu_);
  const long long n = ++episodes_;
  window_.merge(ep.counters);
  total_.merge(ep.counters);
  if (cfg_.replay_interval > 0 && n % cfg_.replay_interval == 0) {
    const fs::path p = dir_ / "replays" / ("episode_" + std::to_string(n) + ".jsonl");
    std::ofstream out(p, std::ios::trunc);
    write_replay(out, ep.initial, ep.final_state,
                 json{{"config_hash", hex64(config_hash(cfg_))},
                      {"code_version", kCodeVersion},
                      {"actor", actor_id},
                      {"actor_episode", actor.episodes()},
                      {"epsilon", cfg_.epsilon},
                      {"behavior_flags", cfg_.behavior_flags}});
  }
}

void Trainer::after_step(int pos, float mse) {
  mse_sum_[pos] += mse;
  ++mse_steps_[pos];
  if (frames_ >= next_log_) {
    log_metrics();
    next_log_ = (frames_ / cfg_.log_interval + 1) * cfg_.log_interval;
  }
  if (frames_ >= next_ckpt_) {
    checkpoint();
    next_ckpt_ = (frames_ / cfg_.checkpoint_interval + 1) * cfg_.checkpoint_interval;
  }
}

void Trainer::log_metrics() {
  if (frames_ == last_log_) return;
  last_log_ = frames_;
  BehaviorCounters window;
  {
    std::lock_guard lock(stats_mu_);
    window = window_;
    window_ = BehaviorCounters{};
  }
  for (int p = 0; p < kNumSeats; ++p) {
    ordered_json line;
    line["wall_s"] = wall();
    line["frames"] = frames_;
    line["position"] = position_name(p);
    if (mse_steps_[p] > 0) line["mse"] = mse_sum_[p] / mse_steps_[p];
    else line["mse"] = nullptr;
    line["episodes"] = episodes_.load();
    line["coop_rate"] = rate_or_null(window[Behavior::kCooperating]);
    line["dwarf_rate"] = rate_or_null(window[Behavior::kDwarfing]);
    line["assist_rate"] = rate_or_null(window[Behavior::kAssisting]);
    metrics_ << line.dump() << '\n';
    mse_sum_[p] = 0;
    mse_steps_[p] = 0;
  }
  metrics_.flush();
}

void Trainer::checkpoint() {
  if (frames_ == last_ckpt_) return;
  const std::string hash = hex64(config_hash(cfg_));
  for (int p = 0; p < kNumSeats; ++p) {
    // Momentum and sidecar first: the .ckpt file is what marks a set complete.
    ValueNet<float> vel(cfg_.shape);
    std::copy(opts_[p].velocity().begin(), opts_[p].velocity().end(), vel.params().begin());
    save_checkpoint(vel, ckpt_path(dir_, p, frames_, ".momentum"));
    ordered_json side;
    side["frames"] = frames_;
    side["wall_s"] = wall();
    side["config_hash"] = hash;
    side["position"] = position_name(p);
    side["behavior_flags"] = cfg_.behavior_flags;
    side["episodes"] = episodes_.load();
    side["code_version"] = kCodeVersion;
    const fs::path sp = ckpt_path(dir_, p, frames_, ".json");
    {
      std::ofstream out(sp, std::ios::trunc);
      out << side.dump(2) << '\n';
      if (!out) throw CheckpointError("cannot write " + sp.string());
    }
    save_checkpoint(nets_[p], ckpt_path(dir_, p, frames_, ".ckpt"));
  }
  last_ckpt_ = frames_;
  result_.checkpoints.push_back(frames_);
}

// Next batch for position p: FIFO order, or a uniform draw (without
// replacement) from a pool refilled from the buffer.
bool Trainer::next_batch(int p) {
  if (cfg_.shuffle_pool == 0) return buffers_[p]->try_pop(cfg_.batch_size, popped_);
  auto& pool = pool_[p];
  const std::size_t want = static_cast<std::size_t>(cfg_.shuffle_pool);
  if (pool.size() < want) buffers_[p]->drain(want - pool.size(), pool);
  if (pool.size() < want) return false;
  popped_.clear();
  for (int i = 0; i < cfg_.batch_size; ++i) {
    const std::size_t k = pool_rng_.uniform(pool.size());
    popped_.push_back(std::move(pool[k]));
    pool[k] = std::move(pool.back());
    pool.pop_back();
  }
  return true;
}

bool Trainer::learn_available() {
  bool any = false;
  for (int p = 0; p < kNumSeats && !out_of_budget(); ++p) {
    while (!out_of_budget() && next_batch(p)) {
      batch_.resize(cfg_.batch_size);
      for (int i = 0; i < cfg_.batch_size; ++i) unpack_transition(popped_[i], batch_, i);
      const LearnerStep st = learner_step(nets_[p], opts_[p], batch_, static_cast<float>(cfg_.lr),
                                          static_cast<float>(cfg_.momentum), grads_[p]);
      frames_ += cfg_.batch_size;
      after_step(p, st.mse);
      any = true;
    }
  }
  return any;
}

TrainResult Trainer::run() {
  setup();
  if (!cfg_.threaded) {
    Actor actor(cfg_, 0, static_cast<std::uint64_t>(frames_));
    while (!out_of_budget()) {
      const auto snap = store_.get();
      Episode ep = actor.next(*snap);
      for (int p = 0; p < kNumSeats; ++p) {
        for (auto& t : ep.transitions[p]) buffers_[p]->push(std::move(t));
      }
      on_episode(ep, actor, 0);
      learn_available();
      if (episodes_ - episodes_at_publish_ >= cfg_.sync_interval) publish();
    }
  } else {
    std::atomic<bool> halt{false};
    std::exception_ptr failure;
    std::mutex failure_mu;
    const int n_actors = worker_threads(cfg_.actor_count);
    std::vector<std::thread> actors;
    for (int a = 0; a < n_actors; ++a) {
      actors.emplace_back([&, a] {
        try {
          Actor actor(cfg_, a, static_cast<std::uint64_t>(frames_));
          while (!halt.load()) {
            const auto snap = store_.get();
            Episode ep = actor.next(*snap);
            for (int p = 0; p < kNumSeats; ++p) {
              for (auto& t : ep.transitions[p]) {
                if (!buffers_[p]->push(std::move(t))) return;
              }
            }
            on_episode(ep, actor, a);
          }
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          halt = true;
        }
      });
    }
    while (!out_of_budget() && !halt.load()) {
      const bool progressed = learn_available();
      if (episodes_ - episodes_at_publish_ >= cfg_.sync_interval) publish();
      if (!progressed) std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    halt = true;
    for (auto& b : buffers_) b->close();
    for (auto& t : actors) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  log_metrics();
  checkpoint();
  result_.frames = frames_;
  result_.episodes = episodes_;
  result_.counters = total_;
  return result_;
}

}  // namespace

TrainResult train(const TrainerConfig& config, bool resume, const std::atomic<bool>* stop) {
  Trainer t(config, resume, stop);
  return t.run();
}

}  // namespace guanzero
