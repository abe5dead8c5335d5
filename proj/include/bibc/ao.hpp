#pragma once

// Alternating-optimization benchmark. Each outer iteration updates, in turn,
// the MMSE receive combiners, the transmit beam (semidefinite relaxation
// solved by successive convex approximation, then Gaussian randomization),
// and the reflection coefficients (quadratic-transform fractional
// programming). Every block keeps the true sum rate from decreasing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/link.hpp"
#include "bibc/numerics.hpp"
#include "bibc/scenario.hpp"

namespace bibc {

struct AoOptions {
  double eps_alpha = 1e-3;          // alpha kept in [eps, 1 - eps]
  std::size_t randomizations = 50;
  double outer_tol = 1e-3;          // relative improvement of the sum rate
  std::size_t max_outer = 50;
  double sca_tol = 1e-4;
  std::size_t sca_max = 30;
  double inner_tol = 1e-6;
  std::size_t inner_max = 300;
  double fp_tol = 1e-6;
  std::size_t fp_max = 100;
  std::size_t projection_sweeps = 50;
};

struct AoState {
  CxMatrix W;                 // relaxed transmit covariance from the last transmit step
  CxVector w;
  std::vector<CxVector> u;
  std::vector<double> alpha;
  std::vector<double> history;  // sum rate after initialization and each outer iteration
  std::size_t iterations = 0;
  bool converged = false;

  BeamState beams() const { return {w, u, alpha}; }
};

inline std::vector<CxVector> solve_receive(const ChannelRealization& ch, const CxVector& w,
                                           const std::vector<double>& alpha,
                                           const SystemConfig& cfg) {
  return mmse_combiners(ch, w, alpha, cfg);
}

// ---------------------------------------------------------------------------
// Transmit block
// ---------------------------------------------------------------------------

namespace detail {

/// Per-tag quadratic forms in W for fixed combiners: with g_i = F_i u_k,
/// |u_k^H F_i^H w|^2 = g_i^H W g_i.
struct TransmitModel {
  struct Tag {
    CxVector signal;                          // F_k u_k
    std::vector<std::pair<double, CxVector>> interference;  // weight, F_i u_k (i = 0 is direct)
    double noise = 0.0;                       // sigma^2 ||u_k||^2
    double alpha = 0.0;
  };
  std::vector<Tag> tags;

  static double form(const CxVector& g, const CxMatrix& W) { return g.dot(W * g).real(); }

  double interference(std::size_t k, const CxMatrix& W) const {
    const Tag& t = tags[k];
    double d = t.noise;
    for (const auto& [c, g] : t.interference) d += c * form(g, W);
    return d;
  }
  double received(std::size_t k, const CxMatrix& W) const {
    return interference(k, W) + tags[k].alpha * form(tags[k].signal, W);
  }

  /// Relaxed objective sum_k log2(A_k / D_k).
  double objective(const CxMatrix& W) const {
    double total = 0.0;
    for (std::size_t k = 0; k < tags.size(); ++k)
      total += std::log2(received(k, W)) - std::log2(interference(k, W));
    return total;
  }

  /// sum_k log2 A_k(W) - [log2 D_k(Wp) + tr(grad D_k (W - Wp)) / (D_k(Wp) ln 2)].
  double surrogate(const CxMatrix& W, const CxMatrix& Wp) const {
    double total = 0.0;
    for (std::size_t k = 0; k < tags.size(); ++k) {
      const double dp = interference(k, Wp);
      const double lin = (interference(k, W) - dp) / (dp * std::numbers::ln2);
      total += std::log2(received(k, W)) - (std::log2(dp) + lin);
    }
    return total;
  }

  CxMatrix surrogate_gradient(const CxMatrix& W, const CxMatrix& Wp, Eigen::Index m) const {
    CxMatrix grad = CxMatrix::Zero(m, m);
    for (std::size_t k = 0; k < tags.size(); ++k) {
      const Tag& t = tags[k];
      const double a = received(k, W) * std::numbers::ln2;
      const double d = interference(k, Wp) * std::numbers::ln2;
      grad += (t.alpha / a) * t.signal * t.signal.adjoint();
      for (const auto& [c, g] : t.interference) grad += (c / a - c / d) * g * g.adjoint();
    }
    return hermitian_part(grad);
  }
};

inline TransmitModel transmit_model(const ChannelRealization& ch, const std::vector<CxVector>& u,
                                    const std::vector<double>& alpha, const SystemConfig& cfg) {
  TransmitModel model;
  for (std::size_t k = 0; k < ch.K(); ++k) {
    TransmitModel::Tag t;
    t.signal = ch.F[k] * u[k];
    t.alpha = alpha[k];
    t.noise = cfg.noise_watts * u[k].squaredNorm();
    t.interference.emplace_back(cfg.delta_d, ch.F0 * u[k]);
    for (std::size_t i = 0; i < ch.K(); ++i)
      if (i != k) t.interference.emplace_back(alpha[i], ch.F[i] * u[k]);
    model.tags.push_back(std::move(t));
  }
  return model;
}

/// Harvesting half-spaces g_f,k^H W g_f,k >= P_th / (1 - alpha_k).
struct EhHalfspaces {
  std::vector<CxVector> g;
  std::vector<double> level;

  bool satisfied(const CxMatrix& W, double rel_tol = 0.0) const {
    for (std::size_t k = 0; k < g.size(); ++k)
      if (TransmitModel::form(g[k], W) < level[k] * (1.0 - rel_tol)) return false;
    return true;
  }
};

inline EhHalfspaces eh_halfspaces(const ChannelRealization& ch, const std::vector<double>& alpha,
                                  double p_th) {
  EhHalfspaces h;
  for (std::size_t k = 0; k < ch.K(); ++k) {
    h.g.push_back(ch.g_f[k]);
    h.level.push_back(p_th / (1.0 - alpha[k]));
  }
  return h;
}

inline CxMatrix halfspace_project(const CxMatrix& X, const CxVector& g, double level) {
  const double v = TransmitModel::form(g, X);
  if (v >= level) return X;
  const double gn = g.squaredNorm();
  return X + ((level - v) / (gn * gn)) * (g * g.adjoint());
}

}  // namespace detail

/// Projection onto {W >= 0, tr W <= P_s} intersected with the harvesting
/// half-spaces. With one multiplier mu_k >= 0 per half-space the projection
/// is W(mu) = P_S(X + sum_k mu_k H_k), P_S the PSD/trace projection, so the
/// result lies in that set exactly. Each <H_k, W(mu)> is nondecreasing in
/// mu_k; the multipliers are found by cyclic one-dimensional root finding.
inline CxMatrix project_transmit_set(const CxMatrix& X, double ps, const detail::EhHalfspaces& eh,
                                     std::size_t max_sweeps = 50) {
  const CxMatrix base = hermitian_part(X);
  CxMatrix W = psd_trace_project(base, ps);
  if (eh.satisfied(W)) return W;

  const std::size_t K = eh.g.size();
  std::vector<CxMatrix> H(K);
  std::vector<double> level(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double gn = eh.g[k].squaredNorm();
    H[k] = eh.g[k] * eh.g[k].adjoint() / gn;  // unit Frobenius norm
    level[k] = eh.level[k] / gn;
  }
  std::vector<double> mu(K, 0.0);
  auto solve = [&] {
    CxMatrix y = base;
    for (std::size_t k = 0; k < K; ++k)
      if (mu[k] > 0.0) y += mu[k] * H[k];
    return psd_trace_project(y, ps);
  };
  auto slack = [&](std::size_t k, const CxMatrix& w) {
    return detail::TransmitModel::form(eh.g[k], w) / eh.g[k].squaredNorm() - level[k];
  };
  const double tol = 1e-12;

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    bool settled = true;
    for (std::size_t k = 0; k < K; ++k) {
      const double s = slack(k, W);
      const bool ok = s >= -tol * level[k] && (mu[k] == 0.0 || s <= tol * level[k]);
      if (ok) continue;
      settled = false;
      auto f = [&](double m) {
        mu[k] = m;
        W = solve();
        return slack(k, W);
      };
      double lo = 0.0, f_lo = f(0.0);
      if (f_lo >= 0.0) continue;  // mu_k = 0 is already feasible
      double hi = std::max({mu[k], level[k], base.norm(), 1e-300}), f_hi = f(hi);
      for (int grow = 0; grow < 200 && f_hi < 0.0; ++grow) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi);
      }
      if (f_hi < 0.0) break;  // unreachable level; leave the best effort
      // Illinois variant of regula falsi.
      int side = 0;
      for (int it = 0; it < 100; ++it) {
        const double m = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        const double fm = f(m);
        if (fm >= 0.0) {
          hi = m;
          f_hi = fm;
          if (side == 1) f_lo *= 0.5;
          side = 1;
        } else {
          lo = m;
          f_lo = fm;
          if (side == -1) f_hi *= 0.5;
          side = -1;
        }
        if (f_hi <= tol * level[k] || hi - lo <= 1e-15 * hi) break;
      }
      f(hi);  // finish on the feasible side
    }
    if (settled) break;
  }
  return W;
}

/// Sum over tags of log2 A_k(W) - B_k(W, W_prev): the relaxed sum rate with
/// the log of the interference-plus-noise term replaced by its tangent at
/// W_prev. It never exceeds the relaxed sum rate and is tight at W = W_prev.
inline double sca_surrogate(const CxMatrix& W, const CxMatrix& W_prev, const ChannelRealization& ch,
                            const std::vector<CxVector>& u, const std::vector<double>& alpha,
                            const SystemConfig& cfg) {
  require_hermitian(W, "sca_surrogate", 1e-10);
  require_hermitian(W_prev, "sca_surrogate", 1e-10);
  if (W.rows() != static_cast<Eigen::Index>(ch.M()) || W_prev.rows() != W.rows())
    throw MatrixError("sca_surrogate: W must be M x M");
  return detail::transmit_model(ch, u, alpha, cfg).surrogate(W, W_prev);
}

/// Relaxed sum rate of a transmit covariance for fixed combiners and alphas.
inline double relaxed_sum_rate(const CxMatrix& W, const ChannelRealization& ch,
                               const std::vector<CxVector>& u, const std::vector<double>& alpha,
                               const SystemConfig& cfg) {
  return detail::transmit_model(ch, u, alpha, cfg).objective(W);
}

/// Projected gradient ascent on the SCA surrogate, repeated around each new
/// iterate; returns the relaxed covariance.
inline CxMatrix sca_transmit(const CxMatrix& W0, const ChannelRealization& ch,
                             const std::vector<CxVector>& u, const std::vector<double>& alpha,
                             const SystemConfig& cfg, double p_th, const AoOptions& opts) {
  const auto model = detail::transmit_model(ch, u, alpha, cfg);
  const auto eh = detail::eh_halfspaces(ch, alpha, p_th);
  const Eigen::Index m = static_cast<Eigen::Index>(ch.M());
  CxMatrix W = project_transmit_set(W0, cfg.ps_watts, eh, opts.projection_sweeps);
  double f_true = model.objective(W);
  double eta = 0.0;
  for (std::size_t outer = 0; outer < opts.sca_max; ++outer) {
    const CxMatrix Wp = W;
    double f = model.surrogate(W, Wp);
    for (std::size_t inner = 0; inner < opts.inner_max; ++inner) {
      const CxMatrix grad = model.surrogate_gradient(W, Wp, m);
      const double gnorm = grad.norm();
      if (!(gnorm > 0.0)) break;
      if (eta == 0.0) eta = cfg.ps_watts / gnorm;
      bool accepted = false;
      double f_new = f;
      CxMatrix W_new;
      for (int tries = 0; tries < 40 && !accepted; ++tries) {
        W_new = project_transmit_set(W + eta * grad, cfg.ps_watts, eh, opts.projection_sweeps);
        f_new = model.surrogate(W_new, Wp);
        if (f_new > f) {
          accepted = true;
        } else {
          eta *= 0.5;
        }
      }
      if (!accepted) break;
      const double gain = f_new - f;
      W = W_new;
      f = f_new;
      eta *= 2.0;
      if (gain < opts.inner_tol) break;
    }
    const double f_next = model.objective(W);
    const double change = f_next - f_true;
    f_true = f_next;
    if (std::abs(change) < opts.sca_tol) break;
  }
  return W;
}

/// Transmit block: SCA on the relaxation, then rank-one recovery. Candidates
/// are the current beam, the principal eigenvector of the relaxed solution,
/// and Gaussian draws x ~ CN(0, W); each is scaled to full power, checked
/// against the harvesting constraints, and scored by the true sum rate with
/// the current combiners.
inline void solve_transmit(AoState& st, const ChannelRealization& ch, const SystemConfig& cfg,
                           SeededRng& rng, const AoOptions& opts = {}) {
  const double p_th = eh_threshold(cfg);
  const CxMatrix start = st.w * st.w.adjoint();
  st.W = sca_transmit(start, ch, st.u, st.alpha, cfg, p_th, opts);

  auto feasible = [&](const CxVector& w) {
    for (std::size_t k = 0; k < ch.K(); ++k)
      if (!eh_feasible(incident_power(ch.g_f[k], w), st.alpha[k], p_th)) return false;
    return w.squaredNorm() <= cfg.ps_watts * (1.0 + 1e-12);
  };
  auto score = [&](const CxVector& w) { return sum_rate(ch, BeamState{w, st.u, st.alpha}, cfg); };
  auto full_power = [&](CxVector w) -> std::optional<CxVector> {
    const double n = w.norm();
    if (!(n > 0.0) || !std::isfinite(n)) return std::nullopt;
    w *= std::sqrt(cfg.ps_watts) / n;
    return w;
  };

  std::optional<CxVector> best;
  double best_score = -1.0;
  auto consider = [&](const std::optional<CxVector>& w) {
    if (!w || !feasible(*w)) return;
    const double s = score(*w);
    if (!best || s > best_score) {
      best = *w;
      best_score = s;
    }
  };

  consider(st.w);
  const HermitianEigen eig = hermitian_eigen(st.W);
  const Eigen::Index m = static_cast<Eigen::Index>(ch.M());
  consider(full_power(eig.vectors.col(m - 1)));
  const RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  for (std::size_t i = 0; i < opts.randomizations; ++i) {
    const CxVector z = cgauss_sample(rng, ch.M(), 1.0);
    consider(full_power(eig.vectors * (root.cast<Complex>().asDiagonal() * z)));
  }
  if (!best) {
    for (std::size_t k = 0; k < ch.K(); ++k) consider(full_power(ch.g_f[k]));
  }
  if (!best) {
    std::size_t worst = 0;
    double deficit = -1.0;
    for (std::size_t k = 0; k < ch.K(); ++k) {
      const double reach = (1.0 - st.alpha[k]) * cfg.ps_watts * ch.g_f[k].squaredNorm();
      if (p_th - reach > deficit) {
        deficit = p_th - reach;
        worst = k;
      }
    }
    throw InfeasibleError(worst, "solve_transmit: no beam meets every harvesting constraint");
  }
  st.w = *best;
}

// ---------------------------------------------------------------------------
// Reflection block
// ---------------------------------------------------------------------------

/// Quadratic-transform auxiliary variable sqrt(V) / S.
inline double fp_lambda(double v, double s) {
  if (!(s > 0.0)) throw ParameterError("fp_lambda: S must be positive");
  if (!(v >= 0.0)) throw ParameterError("fp_lambda: V must be non-negative");
  return std::sqrt(v) / s;
}

namespace detail {

/// SINR_k = V_k / S_k with V_k = alpha_k sig_k, S_k = base_k + sum_{i!=k} alpha_i cross_ki.
struct ReflectionModel {
  std::vector<double> sig;
  std::vector<double> base;
  std::vector<std::vector<double>> cross;

  std::size_t K() const { return sig.size(); }
  double V(std::size_t k, const std::vector<double>& a) const { return a[k] * sig[k]; }
  double S(std::size_t k, const std::vector<double>& a) const {
    double s = base[k];
    for (std::size_t i = 0; i < K(); ++i)
      if (i != k) s += a[i] * cross[k][i];
    return s;
  }
  double rate(const std::vector<double>& a) const {
    double r = 0.0;
    for (std::size_t k = 0; k < K(); ++k) r += std::log2(1.0 + V(k, a) / S(k, a));
    return r;
  }
  /// sum_k log2(1 + 2 lambda_k sqrt(V_k) - lambda_k^2 S_k); -inf outside its domain.
  double transformed(const std::vector<double>& a, const std::vector<double>& lam) const {
    double r = 0.0;
    for (std::size_t k = 0; k < K(); ++k) {
      const double z = 1.0 + 2.0 * lam[k] * std::sqrt(V(k, a)) - lam[k] * lam[k] * S(k, a);
      if (!(z > 0.0)) return -std::numeric_limits<double>::infinity();
      r += std::log2(z);
    }
    return r;
  }
  std::vector<double> transformed_gradient(const std::vector<double>& a,
                                           const std::vector<double>& lam) const {
    std::vector<double> g(K(), 0.0);
    for (std::size_t k = 0; k < K(); ++k) {
      const double z = (1.0 + 2.0 * lam[k] * std::sqrt(V(k, a)) - lam[k] * lam[k] * S(k, a)) *
                       std::numbers::ln2;
      g[k] += lam[k] * std::sqrt(sig[k] / a[k]) / z;
      for (std::size_t i = 0; i < K(); ++i)
        if (i != k) g[i] -= lam[k] * lam[k] * cross[k][i] / z;
    }
    return g;
  }
};

inline ReflectionModel reflection_model(const ChannelRealization& ch, const CxVector& w,
                                        const std::vector<CxVector>& u, const SystemConfig& cfg) {
  const auto s = reader_signals(ch, w);
  ReflectionModel m;
  for (std::size_t k = 0; k < ch.K(); ++k) {
    m.sig.push_back(std::norm(u[k].dot(s.tags[k])));
    m.base.push_back(cfg.delta_d * std::norm(u[k].dot(s.direct)) +
                     cfg.noise_watts * u[k].squaredNorm());
    std::vector<double> row(ch.K(), 0.0);
    for (std::size_t i = 0; i < ch.K(); ++i) row[i] = std::norm(u[k].dot(s.tags[i]));
    m.cross.push_back(std::move(row));
  }
  return m;
}

}  // namespace detail

/// Per-tag interval [eps, min(1 - eps, 1 - P_th / p_in)].
inline std::vector<std::pair<double, double>> reflection_box(const ChannelRealization& ch,
                                                             const CxVector& w, double p_th,
                                                             double eps) {
  std::vector<std::pair<double, double>> box;
  for (std::size_t k = 0; k < ch.K(); ++k) {
    const double p_in = incident_power(ch.g_f[k], w);
    const double hi = p_in > 0.0 ? std::min(1.0 - eps, 1.0 - p_th / p_in) : -1.0;
    if (hi < eps)
      throw InfeasibleError(k, "reflection_box: incident power cannot meet the harvesting threshold");
    box.emplace_back(eps, hi);
  }
  return box;
}

/// Reflection block: alternate the closed-form auxiliary variables with
/// projected gradient ascent on the transformed objective over the box.
/// The result is kept only if the true sum rate does not drop.
inline void solve_reflection(AoState& st, const ChannelRealization& ch, const SystemConfig& cfg,
                             const AoOptions& opts = {}) {
  const double p_th = eh_threshold(cfg);
  const auto box = reflection_box(ch, st.w, p_th, opts.eps_alpha);
  const auto model = detail::reflection_model(ch, st.w, st.u, cfg);
  const std::size_t K = ch.K();
  auto clamp = [&](std::vector<double> a) {
    for (std::size_t k = 0; k < K; ++k) a[k] = std::clamp(a[k], box[k].first, box[k].second);
    return a;
  };

  const std::vector<double> before = st.alpha;
  std::vector<double> a = clamp(st.alpha);
  double rate = model.rate(a);
  double step = 0.0;
  for (std::size_t it = 0; it < opts.fp_max; ++it) {
    std::vector<double> lam(K);
    for (std::size_t k = 0; k < K; ++k) lam[k] = fp_lambda(model.V(k, a), model.S(k, a));
    double f = model.transformed(a, lam);
    for (std::size_t inner = 0; inner < 200; ++inner) {
      const auto g = model.transformed_gradient(a, lam);
      double gn = 0.0;
      for (double x : g) gn += x * x;
      gn = std::sqrt(gn);
      if (!(gn > 0.0) || !std::isfinite(gn)) break;
      if (step == 0.0) step = 0.1 / gn;
      bool accepted = false;
      std::vector<double> cand;
      double f_new = f;
      for (int tries = 0; tries < 60 && !accepted; ++tries) {
        cand = a;
        for (std::size_t k = 0; k < K; ++k) cand[k] += step * g[k];
        cand = clamp(cand);
        f_new = model.transformed(cand, lam);
        if (f_new > f) accepted = true;
        else step *= 0.5;
      }
      if (!accepted) break;
      const double gain = f_new - f;
      a = cand;
      f = f_new;
      step *= 2.0;
      if (gain < 1e-12) break;
    }
    const double next = model.rate(a);
    const double change = next - rate;
    rate = next;
    if (std::abs(change) < opts.fp_tol) break;
  }

  const double old_rate = sum_rate(ch, st.beams(), cfg);
  bool old_feasible = true;
  for (std::size_t k = 0; k < K; ++k)
    old_feasible = old_feasible && before[k] >= box[k].first && before[k] <= box[k].second;
  const double new_rate = sum_rate(ch, BeamState{st.w, st.u, a}, cfg);
  if (!old_feasible || new_rate >= old_rate) st.alpha = a;
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

/// Runs receive -> transmit -> reflection until the relative improvement of
/// the sum rate falls below outer_tol or max_outer iterations pass. Starts
/// from the uniform beam at half power with every alpha = 0.5.
inline AoState ao_loop(const ChannelRealization& ch, const SystemConfig& cfg, SeededRng& rng,
                       const AoOptions& opts = {}) {
  cfg.validate();
  const double p_th = eh_threshold(cfg);
  AoState st;
  const double amp = std::sqrt(cfg.ps_watts / 2.0 / static_cast<double>(cfg.M));
  st.w = CxVector::Constant(static_cast<Eigen::Index>(ch.M()), Complex(amp, 0.0));
  st.alpha.assign(ch.K(), 0.5);
  // An initial alpha that already violates harvesting is pulled into its box
  // when the box is non-empty; otherwise the transmit block must fix the beam.
  for (std::size_t k = 0; k < ch.K(); ++k) {
    const double p_in = incident_power(ch.g_f[k], st.w);
    if (p_in > 0.0) {
      const double hi = std::min(1.0 - opts.eps_alpha, 1.0 - p_th / p_in);
      if (hi >= opts.eps_alpha) st.alpha[k] = std::min(st.alpha[k], hi);
      else st.alpha[k] = opts.eps_alpha;
    }
  }
  st.W = st.w * st.w.adjoint();
  st.u = solve_receive(ch, st.w, st.alpha, cfg);
  double f = sum_rate(ch, st.beams(), cfg);
  st.history.push_back(f);

  for (std::size_t it = 0; it < opts.max_outer; ++it) {
    st.u = solve_receive(ch, st.w, st.alpha, cfg);
    solve_transmit(st, ch, cfg, rng, opts);
    solve_reflection(st, ch, cfg, opts);
    const double next = sum_rate(ch, st.beams(), cfg);
    st.history.push_back(next);
    ++st.iterations;
    const double rel = next > 0.0 ? (next - f) / next : 0.0;
    f = next;
    if (rel < opts.outer_tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

}  // namespace bibc
