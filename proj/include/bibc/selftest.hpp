#pragma once

// Fast property suite shared by the `selftest` command and the acceptance
// binary. Each check returns pass/fail with the worst observed deviation.

#include <cmath>
#include <string>
#include <vector>

#include "bibc/agents/dqn.hpp"
#include "bibc/ao.hpp"
#include "bibc/env.hpp"
#include "bibc/link.hpp"
#include "bibc/neural.hpp"
#include "bibc/scenario.hpp"

namespace bibc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace selftest {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Relative error between backprop and central differences of
/// L = sum(C .* net(X, S)), over every parameter and every input entry.
inline double mlp_gradient_error(const MlpSpec& spec, SeededRng& rng) {
  Mlp net(spec, rng);
  const Eigen::Index batch = 3;
  RealMatrix x(static_cast<Eigen::Index>(spec.sizes.front()), batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  RealMatrix side;
  if (spec.side_inputs) {
    side.resize(static_cast<Eigen::Index>(spec.side_inputs), batch);
    for (Eigen::Index i = 0; i < side.size(); ++i) side.data()[i] = rng.uniform(-1.0, 1.0);
  }
  const RealMatrix* sp = spec.side_inputs ? &side : nullptr;
  RealMatrix c(static_cast<Eigen::Index>(spec.sizes.back()), batch);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1.0, 1.0);

  auto loss = [&] { return (net.predict(x, sp).array() * c.array()).sum(); };
  net.zero_grad();
  net.forward(x, sp);
  const auto in_grad = net.backward(c);
  const RealVector analytic = net.grads();

  const double h = 1e-6;
  auto central = [&](double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss();
    slot = saved - h;
    const double down = loss();
    slot = saved;
    return (up - down) / (2.0 * h);
  };
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < net.params().size(); ++i) {
    const double fd = central(net.params()[i]);
    num += (fd - analytic[i]) * (fd - analytic[i]);
    den += analytic[i] * analytic[i];
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double fd = central(x.data()[i]);
    num += (fd - in_grad.input.data()[i]) * (fd - in_grad.input.data()[i]);
    den += in_grad.input.data()[i] * in_grad.input.data()[i];
  }
  for (Eigen::Index i = 0; i < side.size(); ++i) {
    const double fd = central(side.data()[i]);
    num += (fd - in_grad.side.data()[i]) * (fd - in_grad.side.data()[i]);
    den += in_grad.side.data()[i] * in_grad.side.data()[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

/// The network families used by the learners, on a reduced state size.
inline std::vector<std::pair<std::string, MlpSpec>> network_shapes() {
  const std::size_t ds = 12, da = 5, h = hidden_width(ds), hc = hidden_width(ds + da);
  return {
      {"ddpg_actor", {{ds, h, h, da}, Activation::tanh, Activation::tanh}},
      {"ddpg_critic", {{ds, hc, hc, 1}, Activation::tanh, Activation::identity, da, 1}},
      {"sac_policy", {{ds, h, h, 2 * da}, Activation::relu, Activation::identity}},
      {"sac_critic", {{ds, hc, hc, 1}, Activation::relu, Activation::identity, da, 0}},
      {"dqn", {{ds, h, h, 40}, Activation::relu, Activation::identity}},
      {"dueling", {{ds, h, h, 41}, Activation::relu, Activation::identity}},
  };
}

inline ChannelRealization random_instance(const SystemConfig& cfg, std::uint64_t seed) {
  return episode_channels(cfg, make_topology(cfg, seed), seed, 0);
}

}  // namespace selftest

inline std::vector<CheckResult> run_property_suite(std::uint64_t seed = 7) {
  using namespace selftest;
  std::vector<CheckResult> out;

  {  // backprop vs central differences
    SeededRng rng(seed, stream_id(Purpose::test, 1));
    double worst = 0.0;
    std::string which;
    for (const auto& [name, spec] : network_shapes()) {
      const double e = mlp_gradient_error(spec, rng);
      if (e > worst) {
        worst = e;
        which = name;
      }
    }
    out.push_back({"network gradients vs finite differences (< 1e-4 rel)", worst < 1e-4,
                   "worst " + sci(worst) + " (" + which + ")"});
  }

  {  // sigmoid harvesting model round trip
    const EhParams eh;
    double worst = 0.0;
    for (int i = 1; i < 1000; ++i) {
      const double p = eh.m_nl * i / 1000.0;
      worst = std::max(worst, std::abs(eh_phi(eh_phi_inv(p, eh), eh) - p) / p);
    }
    out.push_back({"EH model inverse round trip (< 1e-9 rel)", worst < 1e-9, "worst " + sci(worst)});
  }

  {  // MMSE combiner against random unit combiners
    SystemConfig cfg;
    cfg.M = 4;
    cfg.N = 4;
    SeededRng rng(seed, stream_id(Purpose::test, 2));
    std::size_t violations = 0;
    double worst = 0.0;
    for (std::uint64_t inst = 0; inst < 50; ++inst) {
      const auto ch = random_instance(cfg, seed * 1000 + inst);
      const CxVector w = cgauss_sample(rng, cfg.M, 1.0).normalized() * std::sqrt(cfg.ps_watts);
      std::vector<double> alpha{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
      BeamState b{w, mmse_combiners(ch, w, alpha, cfg), alpha};
      const auto best = all_sinr(ch, b, cfg);
      for (int trial = 0; trial < 1000; ++trial) {
        BeamState r = b;
        for (auto& u : r.u) u = cgauss_sample(rng, cfg.N, 1.0).normalized();
        const auto g = all_sinr(ch, r, cfg);
        for (std::size_t k = 0; k < g.size(); ++k) {
          const double excess = (g[k] - best[k]) / best[k];
          worst = std::max(worst, excess);
          if (excess > 1e-9) ++violations;
        }
      }
    }
    out.push_back({"MMSE combiner beats 1e3 random combiners on 50 instances", violations == 0,
                   std::to_string(violations) + " violations, max relative excess " + sci(worst)});
  }

  {  // quadratic-transform tightness
    SeededRng rng(seed, stream_id(Purpose::test, 3));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double v = std::exp(rng.uniform(-10.0, 10.0));
      const double s = std::exp(rng.uniform(-10.0, 10.0));
      const double lam = fp_lambda(v, s);
      const double lhs = 1.0 + 2.0 * lam * std::sqrt(v) - lam * lam * s;
      const double rhs = 1.0 + v / s;
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
    out.push_back({"FP tightness 1+2l*sqrt(V)-l*^2 S = 1+V/S (< 1e-9)", worst < 1e-9,
                   "worst " + sci(worst)});
  }

  {  // SCA surrogate tight at the expansion point
    SystemConfig cfg;
    cfg.M = 4;
    cfg.N = 4;
    SeededRng rng(seed, stream_id(Purpose::test, 4));
    double worst = 0.0;
    for (std::uint64_t inst = 0; inst < 20; ++inst) {
      const auto ch = random_instance(cfg, seed * 2000 + inst);
      const CxVector w = cgauss_sample(rng, cfg.M, 1.0).normalized() * std::sqrt(cfg.ps_watts);
      std::vector<double> alpha{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
      const auto u = mmse_combiners(ch, w, alpha, cfg);
      const CxMatrix W = w * w.adjoint();
      const double sur = sca_surrogate(W, W, ch, u, alpha, cfg);
      const double truth = sum_rate(ch, BeamState{w, u, alpha}, cfg);
      worst = std::max(worst, std::abs(sur - truth));
    }
    out.push_back({"SCA surrogate equals the objective at W = W_prev (< 1e-9)", worst < 1e-9,
                   "worst " + sci(worst)});
  }

  {  // codebook
    double worst = 0.0;
    for (std::size_t m : {1, 2, 4, 12, 32})
      for (const auto& w : build_codebook(m, 16)) worst = std::max(worst, std::abs(w.norm() - 1.0));
    out.push_back({"codebook vectors unit norm (< 1e-12)", worst < 1e-12, "worst " + sci(worst)});
  }

  {  // dimensions
    SystemConfig cfg;
    cfg.M = 12;
    cfg.N = 12;
    cfg.K = 2;
    Environment env(cfg, seed);
    const auto s = env.reset(0);
    const bool ok = cfg.state_dim() == 990 && cfg.action_dim() == 26 && s.features.size() == 990;
    out.push_back({"state length 990 and action length 26 at M=N=12, K=2", ok,
                   "state " + std::to_string(cfg.state_dim()) + ", action " +
                       std::to_string(cfg.action_dim())});
  }

  {  // receiver noise
    const double dbm = watts_to_dbm(noise_power_watts(1e6, 10.0));
    out.push_back({"noise power -77 dBm (+-0.01 dB)", std::abs(dbm + 77.0) <= 0.01,
                   std::to_string(dbm) + " dBm"});
  }
  return out;
}

}  // namespace bibc
