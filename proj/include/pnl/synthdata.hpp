#ifndef PNL_SYNTHDATA_HPP_
#define PNL_SYNTHDATA_HPP_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <utility>
#include <vector>

#include "pnl/numerics.hpp"

namespace pnl {

/// Generative model of a tracked-person world. Every identity owns one clean
/// tracklet whose frames are
///   x_t = centroid + drift_t + spread * eps_t
/// with drift_t a stationary AR(1) process (coefficient `drift_correlation`,
/// marginal std `drift_scale`) that is independent per tracklet, plus a
/// per-tracklet constant offset of std `tracklet_offset`.
struct WorldConfig {
  Index identities = 8;
  Index probe_identities = 16;  // held-out identities reserved for retrieval probes
  Index ambient_dim = 32;
  double centroid_scale = 1.0;  // centroids ~ N(0, centroid_scale^2 I)
  double margin = 1.0;          // minimum pairwise centroid distance
  double spread = 0.5;
  double drift_scale = 0.0;
  double drift_correlation = 0.99;
  double tracklet_offset = 0.0;
  Index frames_min = 4000;  // per-tracklet frame counts ~ U{frames_min..frames_max}
  Index frames_max = 6000;

  void validate() const;
};

struct Identity {
  Index id;
  Vec centroid;
  double spread;
};

struct Tracklet {
  Index label;                        // unique tracklet label
  Mat frames;                         // ambient_dim x frame_count
  std::vector<Index> frame_identity;  // ground-truth identity of every frame

  Index frame_count() const { return frames.cols(); }
  /// Distinct identities in order of first appearance.
  std::vector<Index> identities() const;
};

struct World {
  WorldConfig config;
  std::vector<Identity> identities;
  std::vector<Tracklet> tracklets;  // tracklet i belongs to identity i
  std::vector<Identity> held_out;   // never appear in tracklets
};

World generate_world(const WorldConfig& cfg, std::uint64_t seed);

/// Fresh observations drawn from the stationary frame distribution
/// (independent drift and offset per observation), used as a clean retrieval
/// gallery. Covers the held-out identities when the world has any, otherwise
/// the training identities. Returned in identity-major order.
struct Observations {
  std::vector<Vec> x;
  std::vector<Index> identity;
};
Observations sample_probe_set(const World& world, Index per_identity, std::uint64_t seed);

/// Noise-I splits a tracklet so one person carries two labels; Noise-II
/// appends the tail of another person's tracklet onto a host tracklet (an
/// identity switch), so one label covers two people.
struct NoiseSpec {
  double split_rate = 0.2;
  double merge_rate = 0.1;
  double split_fraction_min = 0.25;  // share of frames moved to the new label
  double split_fraction_max = 0.45;
  double merge_fraction_min = 0.2;  // share of donor frames switched onto the host
  double merge_fraction_max = 0.4;

  void validate() const;
};

struct SplitEvent {
  Index identity;
  Index source_label;
  Index new_label;
  Index cut;  // frames [cut, n) of the source moved to new_label
};

struct MergeEvent {
  Index host_label;
  Index host_identity;
  Index donor_label;
  Index donor_identity;
  Index host_offset;   // first host frame that came from the donor
  Index donor_frames;  // number of frames moved
};

struct NoiseRecord {
  std::vector<SplitEvent> splits;
  std::vector<MergeEvent> merges;

  /// Ground-truth identity of `frame` of tracklet `label`, reconstructed from
  /// the planted events alone.
  Index explain(Index label, Index frame) const;
  /// Identities touched by any event.
  std::vector<Index> corrupted_identities() const;
};

struct NoisyTracklets {
  std::vector<Tracklet> tracklets;
  NoiseRecord record;
};

/// Requires clean input (tracklet i is identity i, labelled i).
NoisyTracklets inject_noise(const std::vector<Tracklet>& tracklets, const NoiseSpec& spec,
                            std::uint64_t seed);

struct Sample {
  Vec observation;
  Index y_raw;        // training label in [0, K)
  Index y_true;       // ground-truth identity; evaluation only
  Index tracklet_id;  // tracklet label before compaction
  Index frame;
};

struct Dataset {
  std::vector<Sample> samples;
  Index num_classes = 0;
  Index dim = 0;

  std::size_t size() const { return samples.size(); }
};

/// Drops tracklets with frame_count <= min_frames and keeps every `stride`-th
/// frame starting at frame 0. Surviving tracklets are relabelled 0..K-1 in
/// input order.
Dataset filter_and_sample(const std::vector<Tracklet>& tracklets, Index min_frames, Index stride);

struct CurvePoint {
  Index images;    // X
  double percent;  // Y: percent of labels with fewer than X images
};

/// Cumulative label-size curve for X = 1 .. max_count + 1.
std::vector<CurvePoint> identity_distribution(const Dataset& dataset);

struct AugmentConfig {
  double noise_scale = 0.1;  // additive Gaussian std
  double dropout = 0.1;      // probability of zeroing a coordinate
};

std::pair<Vec, Vec> two_views(const Vec& x, const AugmentConfig& cfg, std::mt19937_64& rng);
std::pair<Vec, Vec> two_views(const Vec& x, const AugmentConfig& cfg, std::uint64_t seed);

/// Tab-separated dump: header line `n K D`, then one line per sample with
/// D observation values, y_raw, y_true, tracklet_id, frame. Doubles are
/// written in shortest round-trip form.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

void write_noise_record(std::ostream& out, const NoiseRecord& record);

}  // namespace pnl

#endif  // PNL_SYNTHDATA_HPP_
