#pragma once

// System geometry, path loss, and per-episode Rayleigh channel draws for a
// bistatic backscatter link: an M-antenna carrier emitter (CE), an N-antenna
// reader, and K single-antenna tags scattered on a disk.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/numerics.hpp"

namespace bibc {

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts * 1000.0); }

/// Nonlinear (sigmoid) energy-harvesting parameters.
struct EhParams {
  double a_nl = 6400.0;     // steepness, 1/W
  double b_nl = 0.003;      // center, W
  double m_nl = 0.024;      // saturation, W
  double p_b_watts = 1e-5;  // activation threshold, W (-20 dBm)
};

/// How the -20 dBm tag requirement maps onto the split incident power.
enum class EhThresholdMode {
  incident,   // P_th = p_b directly
  harvested,  // P_th = Phi^{-1}(p_b)
};

struct PathLoss {
  double c0_db = -30.0;
  double d0_m = 1.0;
  double zeta = 2.0;
};

struct Geometry {
  Vec3 ce{3.0, 0.0, 0.0};
  Vec3 reader{0.0, 8.0, 0.0};
  Vec3 tag_center{3.0, 8.0, 0.0};
  double tag_radius = 2.0;
};

/// dBm noise formula -147 + 10 log10(BW) + NF, returned in watts.
inline double noise_power_watts(double bw_hz, double nf_db) {
  if (!(bw_hz > 0.0)) throw ParameterError("noise_power_watts: bandwidth must be positive");
  return dbm_to_watts(-147.0 + 10.0 * std::log10(bw_hz) + nf_db);
}

struct SystemConfig {
  std::size_t M = 12;
  std::size_t N = 12;
  std::size_t K = 2;
  double ps_watts = 10.0;  // 40 dBm
  double delta_d = 0.01;
  double noise_watts = noise_power_watts(1e6, 10.0);
  PathLoss pathloss{};
  EhParams eh{};
  EhThresholdMode threshold_mode = EhThresholdMode::incident;
  Geometry geometry{};

  std::size_t action_dim() const { return 2 * M + K; }
  std::size_t state_dim() const {
    return 2 * M * N * K + 2 * M * N + 2 * M * K + 2 * N * K + 2 * M + 2 * K + 2;
  }

  void validate() const {
    if (M < 1 || N < 1 || K < 1) throw ParameterError("SystemConfig: M, N, K must be >= 1");
    if (M > 64 || N > 64) throw ParameterError("SystemConfig: antenna counts above 64 unsupported");
    if (!(ps_watts > 0.0)) throw ParameterError("SystemConfig: ps_watts must be positive");
    if (!(delta_d >= 0.0 && delta_d <= 1.0))
      throw ParameterError("SystemConfig: delta_d must lie in [0, 1]");
    if (!(noise_watts > 0.0)) throw ParameterError("SystemConfig: noise_watts must be positive");
    if (!(geometry.tag_radius >= 0.0))
      throw ParameterError("SystemConfig: tag radius must be non-negative");
    if (!(pathloss.d0_m > 0.0)) throw ParameterError("SystemConfig: d0 must be positive");
    if (!(eh.a_nl > 0.0)) throw ParameterError("SystemConfig: a_nl must be positive");
    if (!(eh.p_b_watts > 0.0 && eh.p_b_watts < eh.m_nl))
      throw ParameterError("SystemConfig: need 0 < p_b < M_NL");
  }
};

/// C0 (d/d0)^-zeta in linear scale.
inline double path_loss_linear(double d_m, const PathLoss& pl = {}) {
  if (!(d_m > 0.0)) throw ParameterError("path_loss_linear: distance must be positive");
  return std::pow(10.0, pl.c0_db / 10.0) * std::pow(d_m / pl.d0_m, -pl.zeta);
}

/// K positions uniform over a disk in the z = center.z plane.
inline std::vector<Vec3> place_tags(SeededRng& rng, std::size_t k, const Vec3& center,
                                    double radius) {
  if (!(radius >= 0.0)) throw ParameterError("place_tags: radius must be non-negative");
  std::vector<Vec3> tags;
  tags.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double r = radius * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    tags.push_back({center[0] + r * std::cos(phi), center[1] + r * std::sin(phi), center[2]});
  }
  return tags;
}

struct Topology {
  Vec3 ce_pos;
  Vec3 reader_pos;
  std::vector<Vec3> tag_pos;
};

/// Fixed per experiment: the tags are placed once from the topology stream.
inline Topology make_topology(const SystemConfig& cfg, std::uint64_t seed) {
  SeededRng rng(seed, stream_id(Purpose::topology));
  Topology topo{cfg.geometry.ce, cfg.geometry.reader,
                place_tags(rng, cfg.K, cfg.geometry.tag_center, cfg.geometry.tag_radius)};
  if (distance(topo.ce_pos, topo.reader_pos) <= 0.0)
    throw ParameterError("Topology: CE and reader coincide");
  for (const Vec3& t : topo.tag_pos)
    if (distance(t, topo.ce_pos) <= 0.0 || distance(t, topo.reader_pos) <= 0.0)
      throw ParameterError("Topology: tag coincides with CE or reader");
  return topo;
}

/// Large-scale gains of each link; constant while the topology is fixed.
struct LargeScale {
  double direct = 0.0;          // CE -> reader (same for every reader antenna)
  std::vector<double> forward;  // CE -> tag k
  std::vector<double> backward; // tag k -> reader
};

inline LargeScale large_scale(const SystemConfig& cfg, const Topology& topo) {
  LargeScale ls;
  ls.direct = path_loss_linear(distance(topo.ce_pos, topo.reader_pos), cfg.pathloss);
  for (const Vec3& t : topo.tag_pos) {
    ls.forward.push_back(path_loss_linear(distance(topo.ce_pos, t), cfg.pathloss));
    ls.backward.push_back(path_loss_linear(distance(t, topo.reader_pos), cfg.pathloss));
  }
  return ls;
}

/// One coherence block: F0 (M x N), g_f,k (M), g_b,k (N), F_k = g_f,k g_b,k^H.
struct ChannelRealization {
  CxMatrix F0;
  std::vector<CxVector> g_f;
  std::vector<CxVector> g_b;
  std::vector<CxMatrix> F;
  LargeScale gains;

  std::size_t M() const { return static_cast<std::size_t>(F0.rows()); }
  std::size_t N() const { return static_cast<std::size_t>(F0.cols()); }
  std::size_t K() const { return g_f.size(); }
};

inline ChannelRealization draw_channels(SeededRng& rng, const SystemConfig& cfg,
                                        const Topology& topo) {
  ChannelRealization ch;
  ch.gains = large_scale(cfg, topo);
  ch.F0 = cgauss_matrix(rng, cfg.M, cfg.N, 1.0) * std::sqrt(ch.gains.direct);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    ch.g_f.push_back(cgauss_sample(rng, cfg.M, 1.0) * std::sqrt(ch.gains.forward[k]));
    ch.g_b.push_back(cgauss_sample(rng, cfg.N, 1.0) * std::sqrt(ch.gains.backward[k]));
    ch.F.push_back(ch.g_f.back() * ch.g_b.back().adjoint());
  }
  return ch;
}

/// Channels of a given episode; depends only on (seed, episode).
inline ChannelRealization episode_channels(const SystemConfig& cfg, const Topology& topo,
                                           std::uint64_t seed, std::uint64_t episode) {
  SeededRng rng(seed, stream_id(Purpose::channel, episode));
  return draw_channels(rng, cfg, topo);
}

}  // namespace bibc
