#include "guanzero/valuenet.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "guanzero/cards.h"

namespace guanzero {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void Batch::resize(int samples) {
  n = samples;
  flat.assign(static_cast<std::size_t>(samples) * kFlatDim, 0.0f);
  history.assign(static_cast<std::size_t>(samples) * kHistoryDim, 0.0f);
  action.assign(static_cast<std::size_t>(samples) * kActionDim, 0.0f);
  target.assign(samples, 0.0f);
}

void Batch::set(int i, const StateFeatures& s, const ActionFeatures& a, float g) {
  std::copy(s.flat.begin(), s.flat.end(), flat.begin() + static_cast<std::size_t>(i) * kFlatDim);
  std::copy(s.history.begin(), s.history.end(), history.begin() + static_cast<std::size_t>(i) * kHistoryDim);
  std::copy(a.begin(), a.end(), action.begin() + static_cast<std::size_t>(i) * kActionDim);
  target[i] = g;
}

template <typename T>
ValueNet<T>::ValueNet(NetShape shape) : shape_(shape) {
  if (shape.hidden <= 0 || shape.width <= 0) throw ShapeMismatch("network widths must be positive");
  const int h4 = 4 * shape.hidden;
  std::size_t off = 0;
  constexpr std::size_t kAlign = 64 / sizeof(T);
  auto add = [&](std::string name, int rows, int cols) {
    blocks_.push_back({std::move(name), rows, cols, off});
    off += static_cast<std::size_t>(rows) * cols;
    off = (off + kAlign - 1) / kAlign * kAlign;
  };
  add("lstm.wx", h4, kLstmInput);
  add("lstm.wh", h4, shape.hidden);
  add("lstm.b", h4, 1);
  int in = shape.dense_input();
  for (int l = 0; l < kNumDense; ++l) {
    const int out = l + 1 == kNumDense ? 1 : shape.width;
    add("dense" + std::to_string(l + 1) + ".w", out, in);
    add("dense" + std::to_string(l + 1) + ".b", out, 1);
    in = out;
  }
  params_.assign(off, T(0));
}

template <typename T>
ValueNet<T> ValueNet<T>::init(std::uint64_t seed, NetShape shape) {
  ValueNet net(shape);
  Rng rng(mix_seed(seed, 0x6e6574));
  auto fill = [&](int block, double fan_in, double gain = 1.0) {
    const double bound = gain / std::sqrt(fan_in);
    auto m = net.block(block);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>((2.0 * rng.uniform_real() - 1.0) * bound);
    }
  };
  const double lstm_fan = kLstmInput + shape.hidden;
  fill(kWx, lstm_fan);
  fill(kWh, lstm_fan);
  fill(kLstmB, lstm_fan);
  for (int l = 0; l < kNumDense; ++l) {
    const double fan = net.blocks_[dense_w(l)].cols;
    // He-uniform into the ReLUs, unit variance into the linear output.
    fill(dense_w(l), fan, l + 1 < kNumDense ? std::sqrt(6.0) : std::sqrt(3.0));
    fill(dense_b(l), fan);
  }
  return net;
}

template <typename T>
bool ValueNet<T>::all_finite() const {
  for (T v : params_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
std::uint64_t ValueNet<T>::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data());
  for (std::size_t i = 0; i < params_.size() * sizeof(T); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

template <typename T>
struct Cache {
  using Mat = typename ValueNet<T>::Mat;
  std::array<Mat, kHistorySteps> x;
  std::array<Mat, kHistorySteps> i, f, g, o;
  std::array<Mat, kHistorySteps + 1> c, h;  // index 0 is the zero state
  std::array<Mat, kNumDense> a;             // inputs to each dense layer
  Mat y;
};

template <typename T>
void check_batch(const ValueNet<T>&, const Batch& b) {
  if (b.n < 1) throw ShapeMismatch("empty batch");
  const auto n = static_cast<std::size_t>(b.n);
  if (b.flat.size() != n * kFlatDim || b.history.size() != n * kHistoryDim || b.action.size() != n * kActionDim ||
      b.target.size() != n) {
    throw ShapeMismatch("batch arrays do not match the sample count");
  }
}

template <typename D>
Eigen::Matrix<typename D::Scalar, Eigen::Dynamic, Eigen::Dynamic> sigmoid(const Eigen::MatrixBase<D>& z) {
  using S = typename D::Scalar;
  return (S(1) / (S(1) + (-z.array()).exp())).matrix();
}

template <typename T>
void run_forward(const ValueNet<T>& net, const Batch& b, Cache<T>& k) {
  using Mat = typename ValueNet<T>::Mat;
  check_batch(net, b);
  const int n = b.n;
  const int hid = net.shape().hidden;
  const auto wx = net.block(ValueNet<T>::kWx);
  const auto wh = net.block(ValueNet<T>::kWh);
  const auto lb = net.block(ValueNet<T>::kLstmB);

  // History: sample-major, kHistorySteps blocks of kLstmInput per sample.
  const Eigen::Map<const Eigen::MatrixXf> hist(b.history.data(), kHistoryDim, n);
  k.c[0] = Mat::Zero(hid, n);
  k.h[0] = Mat::Zero(hid, n);
  for (int t = 0; t < kHistorySteps; ++t) {
    k.x[t] = hist.middleRows(t * kLstmInput, kLstmInput).template cast<T>();
    Mat z = wx * k.x[t] + wh * k.h[t];
    z.colwise() += lb.col(0);
    k.i[t] = sigmoid(z.topRows(hid));
    k.f[t] = sigmoid(z.middleRows(hid, hid));
    k.g[t] = z.middleRows(2 * hid, hid).array().tanh().matrix();
    k.o[t] = sigmoid(z.bottomRows(hid));
    k.c[t + 1] = (k.f[t].array() * k.c[t].array() + k.i[t].array() * k.g[t].array()).matrix();
    k.h[t + 1] = (k.o[t].array() * k.c[t + 1].array().tanh()).matrix();
  }

  Mat& a0 = k.a[0];
  a0.resize(net.shape().dense_input(), n);
  a0.topRows(kFlatDim) = Eigen::Map<const Eigen::MatrixXf>(b.flat.data(), kFlatDim, n).template cast<T>();
  a0.middleRows(kDenseActionOffset, kActionDim) =
      Eigen::Map<const Eigen::MatrixXf>(b.action.data(), kActionDim, n).template cast<T>();
  a0.bottomRows(hid) = k.h[kHistorySteps];
  for (int l = 0; l < kNumDense; ++l) {
    Mat z = net.block(ValueNet<T>::dense_w(l)) * k.a[l];
    z.colwise() += net.block(ValueNet<T>::dense_b(l)).col(0);
    if (l + 1 < kNumDense) k.a[l + 1] = z.cwiseMax(T(0));
    else k.y = std::move(z);
  }
}

template <typename T>
T mse_of(const Cache<T>& k, const Batch& b) {
  T sum = 0;
  for (int j = 0; j < b.n; ++j) {
    const T d = k.y(0, j) - static_cast<T>(b.target[j]);
    sum += d * d;
  }
  return sum / static_cast<T>(b.n);
}

}  // namespace

template <typename T>
std::vector<T> forward(const ValueNet<T>& net, const Batch& batch) {
  Cache<T> k;
  run_forward(net, batch, k);
  return std::vector<T>(k.y.data(), k.y.data() + batch.n);
}

template <typename T>
T loss(const ValueNet<T>& net, const Batch& batch) {
  Cache<T> k;
  run_forward(net, batch, k);
  return mse_of(k, batch);
}

template <typename T>
std::vector<bool> activation_pattern(const ValueNet<T>& net, const Batch& batch) {
  Cache<T> k;
  run_forward(net, batch, k);
  std::vector<bool> out;
  for (int l = 1; l < kNumDense; ++l) {
    for (Eigen::Index i = 0; i < k.a[l].size(); ++i) out.push_back(k.a[l].data()[i] > T(0));
  }
  return out;
}

template <typename T>
T loss_and_grads(const ValueNet<T>& net, const Batch& batch, ValueNet<T>& grads) {
  using Mat = typename ValueNet<T>::Mat;
  for (float v : batch.target) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite target");
  }
  Cache<T> k;
  run_forward(net, batch, k);
  const T mse = mse_of(k, batch);
  if (!(grads.shape() == net.shape())) grads = ValueNet<T>(net.shape());
  std::fill(grads.params().begin(), grads.params().end(), T(0));

  const int n = batch.n;
  const int hid = net.shape().hidden;
  Mat dz(1, n);
  for (int j = 0; j < n; ++j) dz(0, j) = T(2) * (k.y(0, j) - static_cast<T>(batch.target[j])) / static_cast<T>(n);

  for (int l = kNumDense - 1; l >= 0; --l) {
    grads.block(ValueNet<T>::dense_w(l)).noalias() = dz * k.a[l].transpose();
    grads.block(ValueNet<T>::dense_b(l)) = dz.rowwise().sum();
    if (l == 0) {
      dz = net.block(ValueNet<T>::dense_w(0)).bottomRightCorner(net.shape().width, hid).transpose() * dz;
      break;
    }
    Mat da = net.block(ValueNet<T>::dense_w(l)).transpose() * dz;
    dz = (k.a[l].array() > T(0)).select(da, T(0));
  }

  // dz now holds the gradient with respect to the final LSTM output.
  const auto wh = net.block(ValueNet<T>::kWh);
  auto gwx = grads.block(ValueNet<T>::kWx);
  auto gwh = grads.block(ValueNet<T>::kWh);
  auto gb = grads.block(ValueNet<T>::kLstmB);
  Mat dh = std::move(dz);
  Mat dc = Mat::Zero(hid, n);
  Mat dgates(4 * hid, n);
  for (int t = kHistorySteps - 1; t >= 0; --t) {
    const auto tc = k.c[t + 1].array().tanh();
    const auto& i = k.i[t].array();
    const auto& f = k.f[t].array();
    const auto& g = k.g[t].array();
    const auto& o = k.o[t].array();
    dc.array() += dh.array() * o * (T(1) - tc.square());
    dgates.topRows(hid) = (dc.array() * g * i * (T(1) - i)).matrix();
    dgates.middleRows(hid, hid) = (dc.array() * k.c[t].array() * f * (T(1) - f)).matrix();
    dgates.middleRows(2 * hid, hid) = (dc.array() * i * (T(1) - g.square())).matrix();
    dgates.bottomRows(hid) = (dh.array() * tc * o * (T(1) - o)).matrix();
    gwx.noalias() += dgates * k.x[t].transpose();
    gwh.noalias() += dgates * k.h[t].transpose();
    gb += dgates.rowwise().sum();
    dh.noalias() = wh.transpose() * dgates;
    dc = (dc.array() * f).matrix();
  }
  return mse;
}

template <typename T>
bool Sgd<T>::step(ValueNet<T>& net, const ValueNet<T>& grads, T lr, T momentum) {
  auto p = net.params();
  auto g = grads.params();
  if (g.size() != p.size()) throw ShapeMismatch("gradient shape does not match parameters");
  if (velocity_.size() != p.size()) velocity_.assign(p.size(), T(0));
  scratch_.resize(p.size());
  bool finite = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T v = momentum * velocity_[i] + g[i];
    scratch_[i] = v;
    finite = finite && std::isfinite(v) && std::isfinite(p[i] - lr * v);
  }
  if (!finite) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    velocity_[i] = scratch_[i];
    p[i] -= lr * scratch_[i];
  }
  return true;
}

template <typename T>
std::vector<T> CandidateScorer<T>::score(const ValueNet<T>& net, const DecisionFeatures& d,
                                         std::span<const Action> legal) {
  const int hid = net.shape().hidden;
  const int width = net.shape().width;
  const int m = static_cast<int>(legal.size());
  if (m == 0) return {};
  if (d.flags.size() != legal.size()) throw ShapeMismatch("flag count does not match candidates");

  const auto wx = net.block(ValueNet<T>::kWx);
  const auto wh = net.block(ValueNet<T>::kWh);
  const auto lb = net.block(ValueNet<T>::kLstmB);
  h_ = Vec::Zero(hid);
  c_ = Vec::Zero(hid);
  for (int t = 0; t < kHistorySteps; ++t) {
    gates_ = lb.col(0);
    const float* x = d.base.history.data() + t * kLstmInput;
    for (int j = 0; j < kLstmInput; ++j) {
      if (x[j] != 0.0f) gates_ += wx.col(j);
    }
    gates_.noalias() += wh * h_;
    const auto i = (T(1) / (T(1) + (-gates_.head(hid).array()).exp()));
    const auto f = (T(1) / (T(1) + (-gates_.segment(hid, hid).array()).exp()));
    const auto g = gates_.segment(2 * hid, hid).array().tanh();
    const auto o = (T(1) / (T(1) + (-gates_.tail(hid).array()).exp()));
    c_ = (f * c_.array() + i * g).matrix();
    h_ = (o * c_.array().tanh()).matrix();
  }

  const auto w1 = net.block(ValueNet<T>::dense_w(0));
  base_ = net.block(ValueNet<T>::dense_b(0)).col(0);
  for (int j = 0; j < kFlatDim; ++j) {
    if (d.base.flat[j] != 0.0f) base_ += w1.col(j);
  }
  base_.noalias() += w1.rightCols(hid) * h_;

  a_.resize(width, m);
  for (int c = 0; c < m; ++c) {
    auto col = a_.col(c);
    col = base_;
    if (d.flags_enabled) {
      for (int p : flag_positions(d.flags[c])) col += w1.col(kFlagOffset + p);
    }
    if (!legal[c].is_pass()) {
      legal[c].combo->cards.for_each([&](CardId id) { col += w1.col(kDenseActionOffset + id); });
    }
    col = col.cwiseMax(T(0));
  }
  for (int l = 1; l < kNumDense; ++l) {
    z_.noalias() = net.block(ValueNet<T>::dense_w(l)) * a_;
    z_.colwise() += net.block(ValueNet<T>::dense_b(l)).col(0);
    if (l + 1 < kNumDense) a_ = z_.cwiseMax(T(0));
  }
  return std::vector<T>(z_.data(), z_.data() + m);
}

namespace {

constexpr char kMagic[4] = {'G', 'Z', 'V', 'N'};

template <typename V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V get(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw CheckpointError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const ValueNet<float>& net, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint32_t>(os, net.shape().hidden);
    put<std::uint32_t>(os, net.shape().width);
    put<std::uint32_t>(os, sizeof(float));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.blocks().size()));
    for (const auto& b : net.blocks()) {
      put<std::uint32_t>(os, b.rows);
      put<std::uint32_t>(os, b.cols);
    }
    put<std::uint64_t>(os, net.num_params());
    os.write(reinterpret_cast<const char*>(net.params().data()),
             static_cast<std::streamsize>(net.num_params() * sizeof(float)));
    put<std::uint64_t>(os, net.checksum());
    os.flush();
    if (!os) throw CheckpointError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place: " + ec.message());
}

ValueNet<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  NetShape shape;
  shape.hidden = static_cast<int>(get<std::uint32_t>(is));
  shape.width = static_cast<int>(get<std::uint32_t>(is));
  if (get<std::uint32_t>(is) != sizeof(float)) throw CheckpointError("unsupported element size");
  if (shape.hidden <= 0 || shape.width <= 0 || shape.hidden > 1 << 16 || shape.width > 1 << 16) {
    throw CheckpointError("implausible checkpoint shape");
  }
  ValueNet<float> net(shape);
  const auto nblocks = get<std::uint32_t>(is);
  if (nblocks != net.blocks().size()) throw CheckpointError("layer count mismatch");
  for (const auto& b : net.blocks()) {
    const auto rows = get<std::uint32_t>(is);
    const auto cols = get<std::uint32_t>(is);
    if (static_cast<int>(rows) != b.rows || static_cast<int>(cols) != b.cols) {
      throw CheckpointError("layer shape mismatch at " + b.name);
    }
  }
  if (get<std::uint64_t>(is) != net.num_params()) throw CheckpointError("parameter count mismatch");
  is.read(reinterpret_cast<char*>(net.params().data()), static_cast<std::streamsize>(net.num_params() * sizeof(float)));
  if (!is) throw CheckpointError("truncated checkpoint");
  if (get<std::uint64_t>(is) != net.checksum()) throw CheckpointError("checkpoint checksum mismatch");
  return net;
}

ValueNet<float> load_checkpoint(const std::filesystem::path& path, const NetShape& expected) {
  ValueNet<float> net = load_checkpoint(path);
  if (!(net.shape() == expected)) {
    throw CheckpointError("checkpoint shape H=" + std::to_string(net.shape().hidden) +
                          " W=" + std::to_string(net.shape().width) + " does not match the configuration");
  }
  return net;
}

template class ValueNet<float>;
template class ValueNet<double>;
template class Sgd<float>;
template class Sgd<double>;
template class CandidateScorer<float>;
template class CandidateScorer<double>;
template std::vector<float> forward(const ValueNet<float>&, const Batch&);
template std::vector<double> forward(const ValueNet<double>&, const Batch&);
template std::vector<bool> activation_pattern(const ValueNet<float>&, const Batch&);
template std::vector<bool> activation_pattern(const ValueNet<double>&, const Batch&);
template float loss(const ValueNet<float>&, const Batch&);
template double loss(const ValueNet<double>&, const Batch&);
template float loss_and_grads(const ValueNet<float>&, const Batch&, ValueNet<float>&);
template double loss_and_grads(const ValueNet<double>&, const Batch&, ValueNet<double>&);

}  // namespace guanzero
