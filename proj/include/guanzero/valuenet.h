#ifndef GUANZERO_VALUENET_H_
#define GUANZERO_VALUENET_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "guanzero/features.h"

namespace guanzero {

inline constexpr int kLstmInput = kHistoryStepDim;  // 432

struct NetShape {
  int hidden = 128;  // LSTM state width
  int width = 512;   // dense hidden width
  int dense_input() const { return kFlatDim + kActionDim + hidden; }
  friend bool operator==(const NetShape&, const NetShape&) = default;
};

// Dense input column order: flat state | action | LSTM output.
inline constexpr int kDenseActionOffset = kFlatDim;
inline constexpr int kDenseHiddenOffset = kFlatDim + kActionDim;
inline constexpr int kNumDense = 6;

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Samples stored one after another; each input is a column once mapped.
struct Batch {
  int n = 0;
  std::vector<float> flat;     // n x kFlatDim
  std::vector<float> history;  // n x kHistoryDim
  std::vector<float> action;   // n x kActionDim
  std::vector<float> target;   // n

  void resize(int samples);
  void set(int i, const StateFeatures& s, const ActionFeatures& a, float g);
};

template <typename T>
class ValueNet {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using MatMap = Eigen::Map<Mat>;
  using ConstMatMap = Eigen::Map<const Mat>;

  explicit ValueNet(NetShape shape = {});

  // Scaled uniform: every block of a layer draws from U(-1/sqrt(fan_in), +).
  static ValueNet init(std::uint64_t seed, NetShape shape = {});

  const NetShape& shape() const { return shape_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  MatMap block(int i) { return MatMap(params_.data() + blocks_[i].offset, blocks_[i].rows, blocks_[i].cols); }
  ConstMatMap block(int i) const {
    return ConstMatMap(params_.data() + blocks_[i].offset, blocks_[i].rows, blocks_[i].cols);
  }
  // Block indices.
  static constexpr int kWx = 0, kWh = 1, kLstmB = 2;
  static constexpr int dense_w(int layer) { return 3 + 2 * layer; }
  static constexpr int dense_b(int layer) { return 4 + 2 * layer; }

  bool all_finite() const;
  std::uint64_t checksum() const;  // FNV-1a over the raw bytes

  template <typename U>
  ValueNet<U> cast() const {
    ValueNet<U> out(shape_);
    for (int b = 0; b < static_cast<int>(blocks_.size()); ++b) out.block(b) = block(b).template cast<U>();
    return out;
  }

  friend bool operator==(const ValueNet& a, const ValueNet& b) {
    return a.shape_ == b.shape_ && a.params_ == b.params_;
  }

 private:
  NetShape shape_;
  std::vector<ParamBlock> blocks_;
  // Blocks start on 64-byte boundaries: Eigen's vectorized reductions peel
  // by address, so equal alignment keeps results identical run to run.
  std::vector<T, Eigen::aligned_allocator<T>> params_;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
std::vector<T> forward(const ValueNet<T>& net, const Batch& batch);

// Mean squared error and its exact gradient (written into `grads`, which is
// reshaped to match `net`).
template <typename T>
T loss_and_grads(const ValueNet<T>& net, const Batch& batch, ValueNet<T>& grads);

template <typename T>
T loss(const ValueNet<T>& net, const Batch& batch);

// Sign pattern of every hidden ReLU pre-activation over the batch. Finite
// difference checks use it to skip perturbations that cross a kink.
template <typename T>
std::vector<bool> activation_pattern(const ValueNet<T>& net, const Batch& batch);

// Momentum SGD: v <- momentum * v + g; p <- p - lr * v.
template <typename T>
class Sgd {
 public:
  Sgd() = default;
  explicit Sgd(std::size_t n) : velocity_(n, T(0)) {}
  // Returns false and leaves both params and velocity untouched if the
  // update would produce a non-finite value.
  bool step(ValueNet<T>& net, const ValueNet<T>& grads, T lr, T momentum);
  std::span<const T> velocity() const { return velocity_; }
  std::span<T> velocity() { return velocity_; }

 private:
  std::vector<T> velocity_;
  std::vector<T> scratch_;
};

// Scores every candidate of one decision point. Exploits the binary inputs:
// first-layer contributions are summed column by column, and the candidate
// independent part (LSTM and state columns) is computed once.
template <typename T>
class CandidateScorer {
 public:
  std::vector<T> score(const ValueNet<T>& net, const DecisionFeatures& d, std::span<const Action> legal);

 private:
  using Mat = typename ValueNet<T>::Mat;
  using Vec = typename ValueNet<T>::Vec;
  Vec gates_, h_, c_, base_;
  Mat a_, z_;
};

// Checkpoints: little-endian binary with a versioned shape header.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Written through a temporary file and renamed into place.
void save_checkpoint(const ValueNet<float>& net, const std::filesystem::path& path);
ValueNet<float> load_checkpoint(const std::filesystem::path& path);
// Throws CheckpointError unless the file header matches `expected`.
ValueNet<float> load_checkpoint(const std::filesystem::path& path, const NetShape& expected);

}  // namespace guanzero

#endif  // GUANZERO_VALUENET_H_
