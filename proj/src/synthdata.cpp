#include "pnl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "pnl/text_io.hpp"

namespace pnl {

namespace {

Vec gaussian(Index n, double stddev, std::mt19937_64& rng) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::normal_distribution<double>(0.0, 1.0)(rng);
  return stddev * v;
}

double uniform(double lo, double hi, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool bernoulli(double p, std::mt19937_64& rng) { return uniform(0.0, 1.0, rng) < p; }

Index fragment_length(Index n, double frac) {
  return std::clamp<Index>(static_cast<Index>(std::llround(frac * static_cast<double>(n))), 1,
                           n - 1);
}

}  // namespace

void WorldConfig::validate() const {
  if (identities < 1) throw ConfigError("world.identities must be >= 1");
  if (probe_identities < 0) throw ConfigError("world.probe_identities must be >= 0");
  if (ambient_dim < 1) throw ConfigError("world.ambient_dim must be >= 1");
  if (!(centroid_scale > 0.0)) throw ConfigError("world.centroid_scale must be > 0");
  if (!(margin >= 0.0)) throw ConfigError("world.margin must be >= 0");
  if (!(spread >= 0.0)) throw ConfigError("world.spread must be >= 0");
  if (!(drift_scale >= 0.0)) throw ConfigError("world.drift_scale must be >= 0");
  if (!(drift_correlation >= 0.0 && drift_correlation < 1.0)) {
    throw ConfigError("world.drift_correlation must be in [0,1)");
  }
  if (!(tracklet_offset >= 0.0)) throw ConfigError("world.tracklet_offset must be >= 0");
  if (frames_min < 1 || frames_max < frames_min) {
    throw ConfigError("world.frames_min/frames_max must satisfy 1 <= min <= max");
  }
}

std::vector<Index> Tracklet::identities() const {
  std::vector<Index> out;
  for (Index id : frame_identity) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

World generate_world(const WorldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  World world{cfg, {}, {}, {}};

  constexpr int kMaxAttempts = 10000;
  std::vector<Identity> all;
  for (Index id = 0; id < cfg.identities + cfg.probe_identities; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Vec c = gaussian(cfg.ambient_dim, cfg.centroid_scale, rng);
      placed = std::all_of(all.begin(), all.end(),
                           [&](const Identity& o) { return (o.centroid - c).norm() >= cfg.margin; });
      if (placed) all.push_back({id, std::move(c), cfg.spread});
    }
    if (!placed) {
      throw ConfigError("world.margin " + format_double(cfg.margin) + " infeasible for " +
                        std::to_string(cfg.identities + cfg.probe_identities) +
                        " identities at centroid_scale " + format_double(cfg.centroid_scale));
    }
  }
  world.identities.assign(all.begin(), all.begin() + cfg.identities);
  world.held_out.assign(all.begin() + cfg.identities, all.end());

  const double rho = cfg.drift_correlation;
  const double innovation = cfg.drift_scale * std::sqrt(1.0 - rho * rho);
  for (const auto& ident : world.identities) {
    const Index n = std::uniform_int_distribution<Index>(cfg.frames_min, cfg.frames_max)(rng);
    Tracklet t{ident.id, Mat(cfg.ambient_dim, n), std::vector<Index>(static_cast<std::size_t>(n), ident.id)};
    const Vec offset = gaussian(cfg.ambient_dim, cfg.tracklet_offset, rng);
    Vec drift = gaussian(cfg.ambient_dim, cfg.drift_scale, rng);
    for (Index f = 0; f < n; ++f) {
      if (f > 0) drift = rho * drift + gaussian(cfg.ambient_dim, innovation, rng);
      t.frames.col(f) = ident.centroid + offset + drift + gaussian(cfg.ambient_dim, ident.spread, rng);
    }
    world.tracklets.push_back(std::move(t));
  }
  return world;
}

Observations sample_probe_set(const World& world, Index per_identity, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& cfg = world.config;
  Observations out;
  const auto& pool = world.held_out.empty() ? world.identities : world.held_out;
  for (const auto& ident : pool) {
    for (Index i = 0; i < per_identity; ++i) {
      Vec x = ident.centroid + gaussian(cfg.ambient_dim, cfg.tracklet_offset, rng) +
              gaussian(cfg.ambient_dim, cfg.drift_scale, rng) +
              gaussian(cfg.ambient_dim, ident.spread, rng);
      out.x.push_back(std::move(x));
      out.identity.push_back(ident.id);
    }
  }
  return out;
}

void NoiseSpec::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(split_rate)) throw ConfigError("noise.split_rate must be in [0,1]");
  if (!unit(merge_rate)) throw ConfigError("noise.merge_rate must be in [0,1]");
  if (!(split_fraction_min > 0.0 && split_fraction_min <= split_fraction_max &&
        split_fraction_max < 1.0)) {
    throw ConfigError("noise.split_fraction_min/max must satisfy 0 < min <= max < 1");
  }
  if (!(merge_fraction_min > 0.0 && merge_fraction_min <= merge_fraction_max &&
        merge_fraction_max < 1.0)) {
    throw ConfigError("noise.merge_fraction_min/max must satisfy 0 < min <= max < 1");
  }
}

Index NoiseRecord::explain(Index label, Index frame) const {
  for (const auto& s : splits) {
    if (s.new_label == label) return s.identity;
  }
  for (const auto& m : merges) {
    if (m.host_label == label && frame >= m.host_offset) return m.donor_identity;
  }
  return label;
}

std::vector<Index> NoiseRecord::corrupted_identities() const {
  std::set<Index> ids;
  for (const auto& s : splits) ids.insert(s.identity);
  for (const auto& m : merges) {
    ids.insert(m.host_identity);
    ids.insert(m.donor_identity);
  }
  return {ids.begin(), ids.end()};
}

NoisyTracklets inject_noise(const std::vector<Tracklet>& tracklets, const NoiseSpec& spec,
                            std::uint64_t seed) {
  spec.validate();
  for (std::size_t i = 0; i < tracklets.size(); ++i) {
    const auto& t = tracklets[i];
    if (t.label != static_cast<Index>(i) || t.identities() != std::vector<Index>{t.label}) {
      throw ContractViolation("inject_noise: input tracklets must be clean and labelled by index");
    }
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = tracklets.size();

  std::vector<bool> split(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    split[i] = bernoulli(spec.split_rate, rng) && tracklets[i].frame_count() >= 2;
  }

  // Donors and hosts are disjoint from split tracklets and from each other.
  std::vector<bool> busy = split;
  std::vector<std::pair<std::size_t, std::size_t>> merges;  // (donor, host)
  for (std::size_t i = 0; i < n; ++i) {
    if (busy[i] || !bernoulli(spec.merge_rate, rng)) continue;
    if (tracklets[i].frame_count() < 2) continue;
    std::vector<std::size_t> hosts;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !busy[j]) hosts.push_back(j);
    }
    if (hosts.empty()) continue;
    const std::size_t host = hosts[std::uniform_int_distribution<std::size_t>(0, hosts.size() - 1)(rng)];
    busy[i] = busy[host] = true;
    merges.emplace_back(i, host);
  }

  NoisyTracklets out{tracklets, {}};
  for (const auto& [donor, host] : merges) {
    Tracklet& d = out.tracklets[donor];
    Tracklet& h = out.tracklets[host];
    const Index moved =
        fragment_length(d.frame_count(), uniform(spec.merge_fraction_min, spec.merge_fraction_max, rng));
    const Index keep = d.frame_count() - moved;
    const Index host_n = h.frame_count();
    Mat frames(h.frames.rows(), host_n + moved);
    frames << h.frames, d.frames.rightCols(moved);
    h.frames = std::move(frames);
    h.frame_identity.insert(h.frame_identity.end(), d.frame_identity.begin() + keep,
                            d.frame_identity.end());
    d.frames.conservativeResize(Eigen::NoChange, keep);
    d.frame_identity.resize(static_cast<std::size_t>(keep));
    out.record.merges.push_back({h.label, h.label, d.label, d.label, host_n, moved});
  }

  Index next_label = static_cast<Index>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!split[i]) continue;
    Tracklet& src = out.tracklets[i];
    const Index total = src.frame_count();
    const Index moved =
        fragment_length(total, uniform(spec.split_fraction_min, spec.split_fraction_max, rng));
    const Index cut = total - moved;
    Tracklet fresh{next_label, src.frames.rightCols(moved),
                   std::vector<Index>(src.frame_identity.begin() + cut, src.frame_identity.end())};
    src.frames.conservativeResize(Eigen::NoChange, cut);
    src.frame_identity.resize(static_cast<std::size_t>(cut));
    out.record.splits.push_back({src.label, src.label, next_label, cut});
    out.tracklets.push_back(std::move(fresh));
    ++next_label;
  }
  return out;
}

Dataset filter_and_sample(const std::vector<Tracklet>& tracklets, Index min_frames, Index stride) {
  if (min_frames < 0) throw ConfigError("min_frames must be >= 0");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  Dataset ds;
  for (const auto& t : tracklets) {
    if (t.frame_count() <= min_frames) continue;
    const Index label = ds.num_classes++;
    ds.dim = t.frames.rows();
    for (Index f = 0; f < t.frame_count(); f += stride) {
      ds.samples.push_back(
          {t.frames.col(f), label, t.frame_identity[static_cast<std::size_t>(f)], t.label, f});
    }
  }
  return ds;
}

std::vector<CurvePoint> identity_distribution(const Dataset& dataset) {
  if (dataset.samples.empty() || dataset.num_classes == 0) {
    throw EmptyInput("identity_distribution: empty dataset");
  }
  std::vector<Index> counts(static_cast<std::size_t>(dataset.num_classes), 0);
  for (const auto& s : dataset.samples) ++counts[static_cast<std::size_t>(s.y_raw)];
  std::sort(counts.begin(), counts.end());
  const Index max_count = counts.back();
  const double labels = static_cast<double>(counts.size());

  std::vector<CurvePoint> curve;
  curve.reserve(static_cast<std::size_t>(max_count + 1));
  std::size_t below = 0;
  for (Index x = 1; x <= max_count + 1; ++x) {
    while (below < counts.size() && counts[below] < x) ++below;
    curve.push_back({x, 100.0 * static_cast<double>(below) / labels});
  }
  return curve;
}

std::pair<Vec, Vec> two_views(const Vec& x, const AugmentConfig& cfg, std::mt19937_64& rng) {
  if (!(cfg.noise_scale >= 0.0)) throw ConfigError("augment.noise_scale must be >= 0");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("augment.dropout must be in [0,1)");
  auto view = [&] {
    Vec v = x + gaussian(x.size(), cfg.noise_scale, rng);
    for (Index i = 0; i < v.size(); ++i) {
      if (bernoulli(cfg.dropout, rng)) v(i) = 0.0;
    }
    return v;
  };
  Vec a = view();
  Vec b = view();
  return {std::move(a), std::move(b)};
}

std::pair<Vec, Vec> two_views(const Vec& x, const AugmentConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return two_views(x, cfg, rng);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  out << ds.samples.size() << '\t' << ds.num_classes << '\t' << ds.dim << '\n';
  for (const auto& s : ds.samples) {
    for (Index j = 0; j < s.observation.size(); ++j) out << format_double(s.observation(j)) << '\t';
    out << s.y_raw << '\t' << s.y_true << '\t' << s.tracklet_id << '\t' << s.frame << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset: missing header");
  auto header = split_fields(trim(line), '\t');
  if (header.size() != 3) throw FormatError("dataset: header must be 'n K D'");
  const auto n = parse_number<std::size_t>(header[0]);
  Dataset ds;
  ds.num_classes = parse_number<Index>(header[1]);
  ds.dim = parse_number<Index>(header[2]);
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw FormatError("dataset: truncated at record " + std::to_string(i));
    auto fields = split_fields(trim(line), '\t');
    if (fields.size() != static_cast<std::size_t>(ds.dim) + 4) {
      throw FormatError("dataset: record " + std::to_string(i) + " has wrong field count");
    }
    Sample s;
    s.observation.resize(ds.dim);
    for (Index j = 0; j < ds.dim; ++j) s.observation(j) = parse_number<double>(fields[static_cast<std::size_t>(j)]);
    const auto at = static_cast<std::size_t>(ds.dim);
    s.y_raw = parse_number<Index>(fields[at]);
    s.y_true = parse_number<Index>(fields[at + 1]);
    s.tracklet_id = parse_number<Index>(fields[at + 2]);
    s.frame = parse_number<Index>(fields[at + 3]);
    if (s.y_raw < 0 || s.y_raw >= ds.num_classes) {
      throw FormatError("dataset: record " + std::to_string(i) + " label out of range");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_noise_record(std::ostream& out, const NoiseRecord& record) {
  out << "kind\tlabel_a\tidentity_a\tlabel_b\tidentity_b\tframe\tcount\n";
  for (const auto& s : record.splits) {
    out << "split\t" << s.source_label << '\t' << s.identity << '\t' << s.new_label << '\t'
        << s.identity << '\t' << s.cut << "\t-\n";
  }
  for (const auto& m : record.merges) {
    out << "merge\t" << m.host_label << '\t' << m.host_identity << '\t' << m.donor_label << '\t'
        << m.donor_identity << '\t' << m.host_offset << '\t' << m.donor_frames << '\n';
  }
}

}  // namespace pnl
