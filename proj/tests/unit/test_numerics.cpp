#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <set>

#include "bibc/numerics.hpp"
#include "helpers.hpp"

using namespace bibc;
using namespace bibc::testing;

TEST(Rng, SameSeedAndStreamReproduce) {
  SeededRng a(5, 9), b(5, 9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsDiffer) {
  SeededRng a(5, stream_id(Purpose::channel, 0)), b(5, stream_id(Purpose::channel, 1));
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, StreamIdsDoNotAlias) {
  std::set<std::uint64_t> ids;
  for (auto p : {Purpose::topology, Purpose::channel, Purpose::network_init, Purpose::replay,
                 Purpose::exploration, Purpose::randomization, Purpose::test})
    for (std::uint64_t i = 0; i < 1000; ++i) ids.insert(stream_id(p, i));
  EXPECT_EQ(ids.size(), 7000u);
}

TEST(Rng, UniformMoments) {
  SeededRng r = rng_for(1);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
  SeededRng r = rng_for(2);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(Rng, IndexIsUniform) {
  SeededRng r = rng_for(3);
  const std::size_t bins = 7;
  const int n = 70000;
  std::vector<int> count(bins, 0);
  for (int i = 0; i < n; ++i) ++count[r.index(bins)];
  for (int c : count) EXPECT_LT(binomial_z(c, n, 1.0 / bins), 4.0);
  EXPECT_THROW(r.index(0), ParameterError);
}

TEST(ComplexGaussian, VarianceSplitsEvenly) {
  SeededRng r = rng_for(4);
  const CxVector x = cgauss_sample(r, 100000, 2.5);
  const double n = static_cast<double>(x.size());
  EXPECT_NEAR(x.squaredNorm() / n, 2.5, 0.05);
  EXPECT_NEAR(x.real().squaredNorm() / n, 1.25, 0.03);
  EXPECT_NEAR(x.imag().squaredNorm() / n, 1.25, 0.03);
  EXPECT_NEAR(std::abs(x.mean()), 0.0, 0.02);
}

TEST(ComplexGaussian, RejectsNonPositiveVariance) {
  SeededRng r = rng_for(5);
  EXPECT_THROW(cgauss_sample(r, 3, 0.0), ParameterError);
  EXPECT_THROW(cgauss_sample(r, 3, -1.0), ParameterError);
}

TEST(ComplexGaussian, MatrixIsRowMajorFill) {
  SeededRng a = rng_for(6), b = rng_for(6);
  const CxMatrix m = cgauss_matrix(a, 2, 3, 1.0);
  const CxVector v = cgauss_sample(b, 6, 1.0);
  EXPECT_EQ(m(0, 1), v[1]);
  EXPECT_EQ(m(1, 0), v[3]);
}

TEST(HermSolve, MatchesEigenCholesky) {
  SeededRng r = rng_for(7);
  for (Eigen::Index n : {1, 2, 5, 12, 30}) {
    const CxMatrix a = random_hpd(r, n);
    const CxVector b = random_matrix(r, n, 1).col(0);
    const CxVector oracle = a.llt().solve(b);
    const CxVector x = herm_solve(a, b);
    EXPECT_LT((x - oracle).norm() / oracle.norm(), 1e-10) << "n=" << n;
    EXPECT_LT((a * x - b).norm() / b.norm(), 1e-10);
  }
}

TEST(HermSolve, RejectsBadInput) {
  SeededRng r = rng_for(8);
  CxMatrix a = random_hpd(r, 3);
  a(0, 1) += Complex(1.0, 0.0);
  EXPECT_THROW(herm_solve(a, CxVector::Ones(3)), MatrixError);
  CxMatrix indefinite = CxMatrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(herm_solve(indefinite, CxVector::Ones(2)), MatrixError);
  EXPECT_THROW(herm_solve(CxMatrix::Identity(2, 2), CxVector::Ones(3)), ParameterError);
}

TEST(QuadForm, MatchesExpansion) {
  SeededRng r = rng_for(9);
  const CxMatrix a = random_hermitian(r, 4);
  const CxVector u = random_matrix(r, 4, 1).col(0);
  Complex manual = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) manual += std::conj(u[i]) * a(i, j) * u[j];
  EXPECT_NEAR(quad_form(u, a), manual.real(), 1e-12);
  EXPECT_NEAR(manual.imag(), 0.0, 1e-12);
  EXPECT_THROW(quad_form(CxVector::Ones(3), a), ParameterError);
}

TEST(HermitianEigen, MatchesEigenSolver) {
  SeededRng r = rng_for(10);
  for (Eigen::Index n : {1, 2, 3, 8, 12, 24}) {
    const CxMatrix a = random_hermitian(r, n);
    const auto mine = hermitian_eigen(a);
    Eigen::SelfAdjointEigenSolver<CxMatrix> oracle(a);
    EXPECT_LT((mine.values - oracle.eigenvalues()).norm(), 1e-10 * a.norm()) << "n=" << n;
    const CxMatrix v = mine.vectors;
    EXPECT_LT((v.adjoint() * v - CxMatrix::Identity(n, n)).norm(), 1e-10);
    EXPECT_LT((from_eigen(v, mine.values) - a).norm(), 1e-10 * a.norm());
    for (Eigen::Index i = 1; i < n; ++i) EXPECT_LE(mine.values[i - 1], mine.values[i]);
  }
}

TEST(HermitianEigen, RepeatedEigenvalues) {
  SeededRng r = rng_for(11);
  const CxMatrix q = random_matrix(r, 5, 5).householderQr().householderQ();
  RealVector lam(5);
  lam << 1.0, 1.0, 1.0, 3.0, 3.0;
  const CxMatrix a = from_eigen(q, lam);
  const auto e = hermitian_eigen(a);
  EXPECT_LT((e.values - lam).norm(), 1e-10);
}

TEST(HermitianEigen, RejectsNonHermitian) {
  CxMatrix a = CxMatrix::Identity(3, 3);
  a(0, 2) = Complex(0.0, 1.0);
  EXPECT_THROW(hermitian_eigen(a), MatrixError);
}

TEST(PsdProject, ClipsNegativeSpectrum) {
  SeededRng r = rng_for(12);
  for (int trial = 0; trial < 20; ++trial) {
    const CxMatrix a = random_hermitian(r, 6);
    const CxMatrix p = psd_project(a);
    Eigen::SelfAdjointEigenSolver<CxMatrix> eig(p);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    EXPECT_LT((psd_project(p) - p).norm(), 1e-10);
  }
}

TEST(PsdTraceProject, FeasibleAndNearestAmongSamples) {
  SeededRng r = rng_for(13);
  for (int trial = 0; trial < 20; ++trial) {
    const CxMatrix a = 3.0 * random_hermitian(r, 4);
    const double budget = 2.0;
    const CxMatrix p = psd_trace_project(a, budget);
    Eigen::SelfAdjointEigenSolver<CxMatrix> eig(p);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    EXPECT_LE(p.trace().real(), budget + 1e-10);
    const double dist = (p - a).norm();
    // Any other feasible point is no closer (first-order optimality oracle).
    for (int s = 0; s < 200; ++s) {
      const CxMatrix b = random_matrix(r, 4, 2);
      CxMatrix q = b * b.adjoint();
      q *= budget * r.uniform() / q.trace().real();
      EXPECT_GE((q - a).norm(), dist - 1e-10);
      // Variational inequality <a - p, q - p> <= 0.
      EXPECT_LE((a - p).cwiseProduct((q - p).conjugate()).sum().real(), 1e-9);
    }
  }
}

TEST(PsdTraceProject, InsideSetIsFixedPoint) {
  SeededRng r = rng_for(14);
  const CxMatrix b = random_matrix(r, 3, 3);
  CxMatrix a = b * b.adjoint();
  a *= 0.5 / a.trace().real();
  EXPECT_LT((psd_trace_project(a, 1.0) - a).norm(), 1e-12);
  EXPECT_THROW(psd_trace_project(a, -1.0), ParameterError);
}
