#include "pnl/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pnl {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'N', 'L', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void block(const Mat& m) {
    pod<std::int64_t>(m.rows());
    pod<std::int64_t>(m.cols());
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  void block(const Vec& v) { block(Mat(v)); }
  void text(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void layers(const std::vector<DenseLayer>& ls) {
    pod<std::uint64_t>(ls.size());
    for (const auto& l : ls) {
      block(l.weight);
      block(l.bias);
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw FormatError("checkpoint: truncated");
    return v;
  }
  Mat mat() {
    const auto rows = pod<std::int64_t>();
    const auto cols = pod<std::int64_t>();
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 32)) {
      throw FormatError("checkpoint: implausible block shape");
    }
    Mat m(rows, cols);
    in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in_) throw FormatError("checkpoint: truncated block");
    return m;
  }
  Vec vec() {
    Mat m = mat();
    if (m.cols() != 1 && m.size() != 0) throw FormatError("checkpoint: expected a vector block");
    return Eigen::Map<Vec>(m.data(), m.size());
  }
  std::string text() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 24)) throw FormatError("checkpoint: implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("checkpoint: truncated string");
    return s;
  }
  std::vector<DenseLayer> layers() {
    const auto n = pod<std::uint64_t>();
    if (n > 1024) throw FormatError("checkpoint: implausible layer count");
    std::vector<DenseLayer> out;
    for (std::uint64_t i = 0; i < n; ++i) {
      Mat w = mat();
      Vec b = vec();
      out.push_back({std::move(w), std::move(b)});
    }
    return out;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(std::ostream& out, const TrainState& state) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.pod(kCheckpointVersion);
  w.layers(state.query.encoder.layers);
  w.block(state.query.head.weight);
  w.block(state.query.head.bias);
  w.layers(state.key.layers);
  w.block(state.bank.centroids());
  w.pod<std::uint64_t>(state.queue.capacity());
  w.pod<std::uint64_t>(state.queue.size());
  for (const auto& e : state.queue.entries()) {
    w.pod<std::int64_t>(e.label);
    w.block(e.key);
  }
  w.pod(state.opt.lr);
  w.pod(state.opt.momentum);
  w.pod(state.opt.weight_decay);
  w.layers(state.opt.velocity.encoder);
  w.block(state.opt.velocity.head.weight);
  w.block(state.opt.velocity.head.bias);
  w.pod<std::int64_t>(state.epoch);
  w.pod<std::uint64_t>(state.step);
  std::ostringstream rng;
  rng << state.rng;
  w.text(rng.str());
  if (!out) throw FormatError("checkpoint: write failed");
}

TrainState load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("checkpoint: bad magic");
  Reader r(in);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  TrainState state;
  state.query.encoder.layers = r.layers();
  state.query.head.weight = r.mat();
  state.query.head.bias = r.vec();
  state.key.layers = r.layers();
  state.bank = PrototypeBank::restore(r.mat());
  const auto capacity = r.pod<std::uint64_t>();
  const auto size = r.pod<std::uint64_t>();
  if (size > capacity) throw FormatError("checkpoint: queue larger than its capacity");
  state.queue = LabelQueue(capacity);
  for (std::uint64_t i = 0; i < size; ++i) {
    const auto label = r.pod<std::int64_t>();
    state.queue.push(r.vec(), label);
  }
  state.opt.lr = r.pod<double>();
  state.opt.momentum = r.pod<double>();
  state.opt.weight_decay = r.pod<double>();
  state.opt.velocity.encoder = r.layers();
  state.opt.velocity.head.weight = r.mat();
  state.opt.velocity.head.bias = r.vec();
  state.epoch = static_cast<int>(r.pod<std::int64_t>());
  state.step = r.pod<std::uint64_t>();
  std::istringstream rng(r.text());
  rng >> state.rng;
  if (!rng) throw FormatError("checkpoint: bad RNG state");

  state.query.encoder.validate();
  state.key.validate();
  if (state.key.layers.size() != state.query.encoder.layers.size()) {
    throw FormatError("checkpoint: key and query encoders differ");
  }
  return state;
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint: cannot open " + path + " for writing");
  save_checkpoint(out, state);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

std::string checkpoint_bytes(const TrainState& state) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(out, state);
  return out.str();
}

}  // namespace pnl
