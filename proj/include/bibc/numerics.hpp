#pragma once

// Complex dense linear algebra and reproducible sampling shared by every
// other module. Sizes here are tiny (M, N <= 64), so the factorizations are
// written out directly rather than delegated to a solver library; Eigen is
// used only as the matrix container and for BLAS-style products.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bibc/errors.hpp"

namespace bibc {

using Complex = std::complex<double>;
using CxMatrix = Eigen::MatrixXcd;
using CxVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purposes that draw randomness. Combined with an index (episode, worker)
/// they give every consumer its own non-aliasing stream.
enum class Purpose : std::uint64_t {
  topology = 1,
  channel = 2,
  network_init = 3,
  replay = 4,
  exploration = 5,
  randomization = 6,
  test = 7,
};

constexpr std::uint64_t stream_id(Purpose p, std::uint64_t index = 0) noexcept {
  return (static_cast<std::uint64_t>(p) << 40) ^ index;
}

/// Seedable generator: identical (seed, stream) pairs yield identical
/// sequences on every platform. The engine is std::mt19937_64, whose output
/// is fixed by the standard; the real-valued transforms are implemented here
/// because the std distributions are implementation-defined.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Unbiased integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw ParameterError("SeededRng::index: empty range");
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return static_cast<std::size_t>(r % bound);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n i.i.d. circularly-symmetric complex Gaussian samples with E|x|^2 = variance.
inline CxVector cgauss_sample(SeededRng& rng, std::size_t n, double variance) {
  if (!(variance > 0.0)) throw ParameterError("cgauss_sample: variance must be positive");
  const double scale = std::sqrt(variance / 2.0);
  CxVector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    out[i] = Complex(scale * re, scale * im);
  }
  return out;
}

/// rows x cols matrix of CN(0, variance) entries, filled row-major.
inline CxMatrix cgauss_matrix(SeededRng& rng, std::size_t rows, std::size_t cols,
                              double variance) {
  const CxVector flat = cgauss_sample(rng, rows * cols, variance);
  CxMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          flat[static_cast<Eigen::Index>(r * cols + c)];
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian helpers
// ---------------------------------------------------------------------------

/// ||A - A^H||_F / ||A||_F (0 for the zero matrix).
inline double hermitian_defect(const CxMatrix& a) {
  const double norm = a.norm();
  if (norm == 0.0) return 0.0;
  return (a - a.adjoint()).norm() / norm;
}

inline void require_hermitian(const CxMatrix& a, const char* who, double tol = 1e-12) {
  if (a.rows() != a.cols())
    throw MatrixError(std::string(who) + ": matrix is not square");
  if (!a.allFinite()) throw MatrixError(std::string(who) + ": matrix has non-finite entries");
  if (hermitian_defect(a) > tol)
    throw MatrixError(std::string(who) + ": matrix is not Hermitian");
}

inline CxMatrix hermitian_part(const CxMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// Solves A x = b for Hermitian positive definite A by Cholesky (A = L L^H).
inline CxVector herm_solve(const CxMatrix& a, const CxVector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw ParameterError("herm_solve: dimension mismatch");
  require_hermitian(a, "herm_solve");
  const Eigen::Index n = a.rows();
  CxMatrix l = CxMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = a(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) diag -= std::norm(l(j, k));
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw MatrixError("herm_solve: matrix is not positive definite");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Complex s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  // L y = b, then L^H x = y.
  CxVector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex s = b[i];
    for (Eigen::Index k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  CxVector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Complex s = y[i];
    for (Eigen::Index k = i + 1; k < n; ++k) s -= std::conj(l(k, i)) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

/// u^H A u for Hermitian A; the (round-off) imaginary part is dropped.
inline double quad_form(const CxVector& u, const CxMatrix& a) {
  if (a.rows() != a.cols() || a.cols() != u.size())
    throw ParameterError("quad_form: dimension mismatch");
  return u.dot(a * u).real();  // Eigen's dot conjugates the first argument
}

struct HermitianEigen {
  RealVector values;   // ascending
  CxMatrix vectors;    // column j pairs with values[j]
};

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
inline HermitianEigen hermitian_eigen(const CxMatrix& input) {
  require_hermitian(input, "hermitian_eigen", 1e-10);
  const Eigen::Index n = input.rows();
  CxMatrix a = hermitian_part(input);
  CxMatrix v = CxMatrix::Identity(n, n);
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= 1e-16 * scale) break;

    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r <= 1e-300) continue;
        const Complex phase = apq / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = 0.5 * std::atan2(2.0 * r, aqq - app);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        // Unitary acting on (p, q): U = diag(1, e^{-i phi}) * [[c, s], [-s, c]].
        const Complex upp = c;
        const Complex upq = s;
        const Complex uqp = -s * std::conj(phase);
        const Complex uqq = c * std::conj(phase);

        for (Eigen::Index i = 0; i < n; ++i) {  // A <- A U
          const Complex aip = a(i, p);
          const Complex aiq = a(i, q);
          a(i, p) = aip * upp + aiq * uqp;
          a(i, q) = aip * upq + aiq * uqq;
        }
        for (Eigen::Index j = 0; j < n; ++j) {  // A <- U^H A
          const Complex apj = a(p, j);
          const Complex aqj = a(q, j);
          a(p, j) = std::conj(upp) * apj + std::conj(uqp) * aqj;
          a(q, j) = std::conj(upq) * apj + std::conj(uqq) * aqj;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index i = 0; i < n; ++i) {  // V <- V U
          const Complex vip = v(i, p);
          const Complex viq = v(i, q);
          v(i, p) = vip * upp + viq * uqp;
          v(i, q) = vip * upq + viq * uqq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });
  HermitianEigen out{RealVector(n), CxMatrix(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.values[j] = a(src, src).real();
    out.vectors.col(j) = v.col(src);
  }
  return out;
}

inline CxMatrix from_eigen(const CxMatrix& vectors, const RealVector& values) {
  CxMatrix out = vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint();
  return hermitian_part(out);
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to zero.
inline CxMatrix psd_project(const CxMatrix& a) {
  require_hermitian(a, "psd_project");
  const HermitianEigen eig = hermitian_eigen(a);
  return from_eigen(eig.vectors, eig.values.cwiseMax(0.0));
}

/// Frobenius projection onto {W >= 0, tr W <= budget}: the eigenvalues are
/// projected onto {lambda >= 0, sum lambda <= budget}.
inline CxMatrix psd_trace_project(const CxMatrix& a, double budget) {
  if (!(budget >= 0.0)) throw ParameterError("psd_trace_project: negative budget");
  require_hermitian(a, "psd_trace_project", 1e-10);
  const HermitianEigen eig = hermitian_eigen(a);
  RealVector lam = eig.values.cwiseMax(0.0);
  if (lam.sum() > budget) {
    // Find shift t with sum max(lambda_i - t, 0) = budget.
    std::vector<double> sorted(eig.values.data(), eig.values.data() + eig.values.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double shift = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      cumulative += sorted[i];
      const double t = (cumulative - budget) / static_cast<double>(i + 1);
      if (i + 1 == sorted.size() || sorted[i + 1] <= t) {
        shift = t;
        break;
      }
    }
    lam = (eig.values.array() - shift).cwiseMax(0.0).matrix();
  }
  return from_eigen(eig.vectors, lam);
}

}  // namespace bibc
