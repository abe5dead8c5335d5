#pragma once

#include <cmath>

#include "bibc/numerics.hpp"

namespace bibc::testing {

inline SeededRng rng_for(std::uint64_t index) { return SeededRng(2024, stream_id(Purpose::test, index)); }

inline CxMatrix random_matrix(SeededRng& rng, Eigen::Index r, Eigen::Index c) {
  return cgauss_matrix(rng, static_cast<std::size_t>(r), static_cast<std::size_t>(c), 1.0);
}

inline CxMatrix random_hermitian(SeededRng& rng, Eigen::Index n) {
  const CxMatrix a = random_matrix(rng, n, n);
  return hermitian_part(a);
}

inline CxMatrix random_hpd(SeededRng& rng, Eigen::Index n) {
  const CxMatrix a = random_matrix(rng, n, n);
  CxMatrix h = a * a.adjoint();
  h.diagonal().array() += 0.1;
  return hermitian_part(h);
}

/// Number of standard deviations between an observed count and its binomial mean.
inline double binomial_z(double count, double n, double p) {
  return std::abs(count - n * p) / std::sqrt(n * p * (1.0 - p));
}

}  // namespace bibc::testing
