#pragma once

// Physical-layer figures of merit: incident power, per-tag SINR at the
// reader, sum rate, the sigmoid energy-harvesting model and its inverse, and
// the MMSE receive combiner.

#include <cmath>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/numerics.hpp"
#include "bibc/scenario.hpp"

namespace bibc {

/// Sigmoid harvested power M_NL / (1 + exp(-a (x - b))).
inline double eh_phi(double x_watts, const EhParams& eh) {
  if (!(x_watts >= 0.0)) throw ParameterError("eh_phi: input power must be non-negative");
  return eh.m_nl / (1.0 + std::exp(-eh.a_nl * (x_watts - eh.b_nl)));
}

/// Input power x with eh_phi(x) = p:  b - ln((M_NL - p) / p) / a.
inline double eh_phi_inv(double p_watts, const EhParams& eh) {
  if (!(p_watts > 0.0 && p_watts < eh.m_nl))
    throw DomainError("eh_phi_inv: harvested power must lie in (0, M_NL)");
  return eh.b_nl - std::log((eh.m_nl - p_watts) / p_watts) / eh.a_nl;
}

/// Threshold applied to the harvesting branch (1 - alpha) p_in.
inline double eh_threshold(const SystemConfig& cfg) {
  switch (cfg.threshold_mode) {
    case EhThresholdMode::harvested:
      return eh_phi_inv(cfg.eh.p_b_watts, cfg.eh);
    case EhThresholdMode::incident:
      break;
  }
  return cfg.eh.p_b_watts;
}

/// Closed constraint (1 - alpha) p_in >= P_th.
inline bool eh_feasible(double p_in, double alpha, double p_th) {
  return (1.0 - alpha) * p_in >= p_th;
}

/// Transmit beam, per-tag receive combiners, and reflection coefficients.
struct BeamState {
  CxVector w;
  std::vector<CxVector> u;
  std::vector<double> alpha;
};

/// |g_f,k^H w|^2.
inline double incident_power(const CxVector& g_fk, const CxVector& w) {
  if (g_fk.size() != w.size()) throw ParameterError("incident_power: dimension mismatch");
  return std::norm(g_fk.dot(w));
}

namespace detail {

/// F_i^H w for i = 0 (direct) and the K cascades, as seen by the reader.
struct ReaderSignals {
  CxVector direct;
  std::vector<CxVector> tags;
};

inline ReaderSignals reader_signals(const ChannelRealization& ch, const CxVector& w) {
  if (static_cast<std::size_t>(w.size()) != ch.M())
    throw ParameterError("reader_signals: beam length must equal M");
  ReaderSignals s;
  s.direct = ch.F0.adjoint() * w;
  for (std::size_t k = 0; k < ch.K(); ++k) s.tags.push_back(ch.g_b[k] * ch.g_f[k].dot(w));
  return s;
}

inline double sinr_from_signals(std::size_t k, const ReaderSignals& s, const CxVector& u,
                                const std::vector<double>& alpha, const SystemConfig& cfg) {
  const double signal = alpha[k] * std::norm(u.dot(s.tags[k]));
  double denom = cfg.delta_d * std::norm(u.dot(s.direct)) + cfg.noise_watts * u.squaredNorm();
  for (std::size_t i = 0; i < s.tags.size(); ++i)
    if (i != k) denom += alpha[i] * std::norm(u.dot(s.tags[i]));
  return signal / denom;
}

}  // namespace detail

inline double sinr(std::size_t k, const ChannelRealization& ch, const BeamState& beams,
                   const SystemConfig& cfg) {
  if (k >= ch.K()) throw ParameterError("sinr: tag index out of range");
  return detail::sinr_from_signals(k, detail::reader_signals(ch, beams.w), beams.u[k],
                                   beams.alpha, cfg);
}

inline std::vector<double> all_sinr(const ChannelRealization& ch, const BeamState& beams,
                                    const SystemConfig& cfg) {
  const auto signals = detail::reader_signals(ch, beams.w);
  std::vector<double> out;
  for (std::size_t k = 0; k < ch.K(); ++k)
    out.push_back(detail::sinr_from_signals(k, signals, beams.u[k], beams.alpha, cfg));
  return out;
}

/// Sum over tags of log2(1 + SINR), in bps/Hz.
inline double sum_rate(const ChannelRealization& ch, const BeamState& beams,
                       const SystemConfig& cfg) {
  double total = 0.0;
  for (double g : all_sinr(ch, beams, cfg)) total += std::log2(1.0 + g);
  return total;
}

/// Per-tag MMSE combiners u_k = Q_k^{-1} h~_k / ||Q_k^{-1} h~_k||, which
/// maximize the SINR (a generalized Rayleigh quotient) for fixed (w, alpha).
inline std::vector<CxVector> mmse_combiners(const ChannelRealization& ch, const CxVector& w,
                                            const std::vector<double>& alpha,
                                            const SystemConfig& cfg) {
  const auto s = detail::reader_signals(ch, w);
  const Eigen::Index n = static_cast<Eigen::Index>(ch.N());
  std::vector<CxVector> out;
  for (std::size_t k = 0; k < ch.K(); ++k) {
    CxMatrix q = cfg.delta_d * s.direct * s.direct.adjoint();
    q.diagonal().array() += cfg.noise_watts;
    for (std::size_t i = 0; i < ch.K(); ++i)
      if (i != k) q += alpha[i] * s.tags[i] * s.tags[i].adjoint();
    q = hermitian_part(q);
    CxVector x = herm_solve(q, s.tags[k]);  // sqrt(alpha_k) only rescales
    const double norm = x.norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      out.push_back(x / norm);
    } else {
      CxVector e = CxVector::Zero(n);
      e[0] = 1.0;
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace bibc
