#include "doctest.h"
#include "wrvi/basis/chebyshev.hpp"
#include "wrvi/basis/unscented.hpp"
#include "wrvi/util/rng.hpp"

#include <Eigen/Dense>
#include <cmath>

using namespace wrvi;
using ad::Tensor;

TEST_SUITE_BEGIN("basis");

namespace {

// Independent oracle: Clenshaw recurrence on the mapped coordinate.
double clenshaw(const std::vector<double>& coeffs, double x, Interval dom) {
  const double xi = dom.to_unit(x);
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) {
    const double b0 = 2.0 * xi * b1 - b2 + coeffs[k];
    b2 = b1;
    b1 = b0;
  }
  return xi * b1 - b2 + coeffs[0];
}

// Gauss-Hermite nodes/weights via the Golub-Welsch symmetric tridiagonal
// eigenproblem; integrates against exp(-x^2/2)/sqrt(2 pi) after rescaling.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jac(i - 1, i) = off;
    jac(i, i - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes.resize(n);
  weights.resize(n);
  const double mu0 = std::sqrt(3.14159265358979323846);  // integral of exp(-x^2)
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

}  // namespace

TEST_CASE("vandermonde: endpoint rows and recurrence values") {
  Vandermonde v = chebyshev_vandermonde(2, {-1.0, 0.0, 1.0}, {-1.0, 1.0});
  const double expect[3][3] = {{1, -1, 1}, {1, 0, -1}, {1, 1, 1}};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(v.matrix.at(i, k) == doctest::Approx(expect[i][k]).epsilon(1e-14));
    }
  }

  Vandermonde v2 = chebyshev_vandermonde(2, {0.5}, {-1.0, 1.0});
  CHECK(v2.matrix.at(0, 0) == doctest::Approx(1.0));
  CHECK(v2.matrix.at(0, 1) == doctest::Approx(0.5));
  CHECK(v2.matrix.at(0, 2) == doctest::Approx(-0.5));

  // 60-element mesh, order 9: first-kind values stay in [-1, 1]
  std::vector<double> nodes;
  for (int i = 0; i <= 60; ++i) nodes.push_back(-1.0 + 2.0 * i / 60.0);
  Vandermonde v3 = chebyshev_vandermonde(9, nodes, {-1.0, 1.0});
  for (std::size_t i = 0; i < v3.matrix.rows(); ++i) {
    for (std::size_t k = 0; k < v3.matrix.cols(); ++k) {
      CHECK(std::fabs(v3.matrix.at(i, k)) <= 1.0 + 1e-12);
    }
  }

  CHECK_THROWS_AS(chebyshev_vandermonde(2, {1.5}, {-1.0, 1.0}), ShapeError);
}

TEST_CASE("vandermonde agrees with Clenshaw to 1e-12 up to order 32") {
  RandomStream rng(1);
  for (std::size_t order : {1u, 4u, 9u, 17u, 32u}) {
    std::vector<double> coeffs(order + 1);
    for (auto& c : coeffs) c = rng.normal();
    Interval dom{-2.0, 3.0};
    std::vector<double> pts;
    for (int i = 0; i < 25; ++i) pts.push_back(rng.uniform(dom.a, dom.b));
    Vandermonde v = chebyshev_vandermonde(order, pts, dom);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= order; ++k) acc += v.matrix.at(i, k) * coeffs[k];
      CHECK(acc == doctest::Approx(clenshaw(coeffs, pts[i], dom)).epsilon(1e-12));
    }
  }
}

TEST_CASE("project_to_fem: fixtures") {
  // constant coefficient
  ChebyshevField constant{Tensor::vector({3.25, 0.0, 0.0}), {-1.0, 1.0}, Transform::identity};
  Tensor nodal = project_to_fem(constant, {-1.0, -0.2, 0.7, 1.0});
  for (std::size_t i = 0; i < nodal.size(); ++i) CHECK(nodal[i] == doctest::Approx(3.25));

  // T1 reproduces coordinates
  ChebyshevField linear{Tensor::vector({0.0, 1.0}), {-1.0, 1.0}, Transform::identity};
  Tensor nodal2 = project_to_fem(linear, {-1.0, -0.5, 0.25, 1.0});
  CHECK(nodal2[0] == doctest::Approx(-1.0));
  CHECK(nodal2[1] == doctest::Approx(-0.5));
  CHECK(nodal2[2] == doctest::Approx(0.25));
  CHECK(nodal2[3] == doctest::Approx(1.0));

  // frozen Clenshaw value at 0.3: 1 + 2*0.3 + 3*(2*0.09 - 1) = -0.86
  ChebyshevField mix{Tensor::vector({1.0, 2.0, 3.0}), {-1.0, 1.0}, Transform::identity};
  Tensor nodal3 = project_to_fem(mix, {0.3});
  CHECK(nodal3[0] == doctest::Approx(-0.86).epsilon(1e-12));
}

TEST_CASE("softplus projection is strictly positive") {
  RandomStream rng(9);
  std::vector<double> pts;
  for (int i = 0; i < 11; ++i) pts.push_back(-1.0 + 0.2 * i);
  for (int rep = 0; rep < 50; ++rep) {
    Tensor coeffs = Tensor::zeros({5});
    for (std::size_t i = 0; i < 5; ++i) coeffs[i] = 3.0 * rng.normal();
    ChebyshevField field{coeffs, {-1.0, 1.0}, Transform::softplus};
    Tensor nodal = project_to_fem(field, pts);
    for (std::size_t i = 0; i < nodal.size(); ++i) CHECK(nodal[i] > 0.0);
  }
}

TEST_CASE("pushforward: exact cases and affine structure") {
  Vandermonde v = chebyshev_vandermonde(2, {-1.0, -0.25, 0.5, 1.0}, {-1.0, 1.0});
  Tensor mean = Tensor::vector({0.5, -1.0, 0.25});

  // zero covariance collapses to the mean map
  MeshGaussian zero = pushforward_gaussian(mean, Tensor::zeros({3}), v);
  for (std::size_t i = 0; i < zero.cov.size(); ++i) CHECK(zero.cov[i] == doctest::Approx(0.0));

  // identity map returns the diagonal covariance
  Vandermonde ident{Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), {0, 1, 2}};
  Tensor dc = Tensor::vector({0.1, 0.2, 0.3});
  MeshGaussian same = pushforward_gaussian(mean, dc, ident);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(same.mean[i] == doctest::Approx(mean[i]));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(same.cov.at(i, j) == doctest::Approx(i == j ? dc[i] : 0.0));
    }
  }

  // mean shift leaves the covariance untouched
  Tensor shifted = ad::add_scalar(mean, 0.75);
  MeshGaussian a = pushforward_gaussian(mean, dc, v);
  MeshGaussian b = pushforward_gaussian(shifted, dc, v);
  Tensor delta = ad::reshape(
      ad::matmul(v.matrix, Tensor::matrix(3, 1, {0.75, 0.75, 0.75})), {v.matrix.rows()});
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    CHECK(b.mean[i] - a.mean[i] == doctest::Approx(delta[i]).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < a.cov.size(); ++i) {
    CHECK(a.cov[i] == doctest::Approx(b.cov[i]).epsilon(1e-14));
  }

  CHECK_THROWS_AS(pushforward_gaussian(Tensor::vector({1.0}), Tensor::vector({1.0}), v),
                  ShapeError);
}

TEST_CASE("pushforward matches a Monte Carlo oracle within 3 standard errors") {
  Vandermonde v = chebyshev_vandermonde(2, {-0.8, -0.1, 0.4, 0.9}, {-1.0, 1.0});
  Tensor mean = Tensor::vector({0.3, -0.6, 1.1});
  Tensor dc = Tensor::vector({0.5, 1.5, 0.25});
  MeshGaussian push = pushforward_gaussian(mean, dc, v);

  const int n = 1000000;
  RandomStream rng(2024);
  const std::size_t m = 4;
  std::vector<double> s1(m, 0.0);
  std::vector<double> s2(m * m, 0.0);
  for (int it = 0; it < n; ++it) {
    double c[3];
    for (int k = 0; k < 3; ++k) c[k] = mean[k] + std::sqrt(dc[k]) * rng.normal();
    double y[4];
    for (std::size_t i = 0; i < m; ++i) {
      y[i] = v.matrix.at(i, 0) * c[0] + v.matrix.at(i, 1) * c[1] + v.matrix.at(i, 2) * c[2];
      s1[i] += y[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) s2[i * m + j] += y[i] * y[j];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double mi = s1[i] / n, mj = s1[j] / n;
      const double cij = s2[i * m + j] / n - mi * mj;
      const double truth = push.cov.at(i, j);
      // var of a sample covariance entry ~ (sii sjj + sij^2)/n
      const double se = std::sqrt(
          (push.cov.at(i, i) * push.cov.at(j, j) + truth * truth) / static_cast<double>(n));
      CHECK(std::fabs(cij - truth) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("unscented transform: identity, affine exactness, negative variance") {
  Tensor mean = Tensor::vector({0.4, -1.2, 2.0});
  Tensor var = Tensor::vector({0.09, 1.0, 0.0});

  UnscentedMoments ident = unscented_moments(mean, var, [](double x) { return x; });
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ident.mean[i] == doctest::Approx(mean[i]).epsilon(1e-14));
    CHECK(ident.cov_diag[i] == doctest::Approx(var[i]).epsilon(1e-13));
  }

  const double a = -2.5, b = 0.7;
  UnscentedMoments aff = unscented_moments(mean, var, [&](double x) { return a * x + b; });
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(aff.mean[i] == doctest::Approx(a * mean[i] + b).epsilon(1e-13));
    CHECK(aff.cov_diag[i] == doctest::Approx(a * a * var[i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(
      unscented_moments(mean, Tensor::vector({1.0, -0.1, 1.0}), [](double x) { return x; }),
      NumericError);
}

TEST_CASE("unscented softplus mean vs 64-node Gauss-Hermite quadrature") {
  std::vector<double> nodes, weights;
  gauss_hermite(64, nodes, weights);
  auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
  // x ~ N(0,1): substitute x = sqrt(2) t against exp(-t^2)
  double gh_mean = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    gh_mean += weights[i] * softplus(std::sqrt(2.0) * nodes[i]);
  }
  gh_mean /= std::sqrt(3.14159265358979323846);

  UnscentedMoments ut = unscented_moments(Tensor::vector({0.0}), Tensor::vector({1.0}),
                                          [&](double x) { return softplus(x); });
  CHECK(std::fabs(ut.mean[0] - gh_mean) / std::fabs(gh_mean) < 5e-2);
}

TEST_CASE("chebyshev_fit inverts projection on exact data") {
  RandomStream rng(77);
  std::vector<double> nodes;
  for (int i = 0; i <= 20; ++i) nodes.push_back(-1.0 + 0.1 * i);
  Tensor coeffs = Tensor::zeros({5});
  for (std::size_t i = 0; i < 5; ++i) coeffs[i] = rng.normal();
  ChebyshevField field{coeffs, {-1.0, 1.0}, Transform::identity};
  Tensor nodal = project_to_fem(field, nodes);
  Tensor fitted = chebyshev_fit(4, nodes, nodal, {-1.0, 1.0});
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(fitted[i] == doctest::Approx(coeffs[i]).epsilon(1e-10));
  }
}

TEST_SUITE_END();
