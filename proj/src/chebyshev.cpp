#include "wrvi/basis/chebyshev.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace wrvi {

using ad::Tensor;

Transform transform_from_string(const std::string& s) {
  if (s == "identity") return Transform::identity;
  if (s == "softplus") return Transform::softplus;
  if (s == "softplus_plus_one") return Transform::softplus_plus_one;
  if (s == "sigmoid") return Transform::sigmoid;
  throw ConfigError("unknown transform '" + s + "'");
}

std::string transform_to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::softplus: return "softplus";
    case Transform::softplus_plus_one: return "softplus_plus_one";
    case Transform::sigmoid: return "sigmoid";
  }
  return "identity";
}

double apply_transform(Transform t, double x) {
  switch (t) {
    case Transform::identity: return x;
    case Transform::softplus:
      return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    case Transform::softplus_plus_one:
      return 1.0 + (x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)));
    case Transform::sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return x;
}

Tensor apply_transform(Transform t, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply_transform(t, x[i]);
  return out;
}

Vandermonde chebyshev_vandermonde(std::size_t order, const std::vector<double>& points,
                                  Interval domain) {
  if (!(domain.width() > 0.0)) throw ShapeError("chebyshev_vandermonde: empty domain");
  const std::size_t n = points.size();
  const std::size_t m = order + 1;
  Tensor mat = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = domain.to_unit(points[i]);
    if (xi < -1.0 - 1e-12 || xi > 1.0 + 1e-12) {
      throw ShapeError("chebyshev_vandermonde: point " + std::to_string(points[i]) +
                       " outside domain [" + std::to_string(domain.a) + "," +
                       std::to_string(domain.b) + "]");
    }
    double tkm1 = 1.0;
    double tk = xi;
    mat.at(i, 0) = 1.0;
    if (m > 1) mat.at(i, 1) = xi;
    for (std::size_t k = 2; k < m; ++k) {
      const double tkp1 = 2.0 * xi * tk - tkm1;
      mat.at(i, k) = tkp1;
      tkm1 = tk;
      tk = tkp1;
    }
  }
  return {std::move(mat), points};
}

Tensor project_to_fem(const ChebyshevField& field, const std::vector<double>& mesh_nodes) {
  Vandermonde v = chebyshev_vandermonde(field.order(), mesh_nodes, field.domain);
  Tensor nodal = ad::matmul(v.matrix, ad::reshape(field.coeffs, {field.coeffs.size(), 1}));
  nodal = ad::reshape(nodal, {nodal.size()});
  return apply_transform(field.transform, nodal);
}

Tensor MeshGaussian::cov_diagonal() const {
  const std::size_t n = mean.size();
  Tensor d = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) d[i] = cov.at(i, i);
  return d;
}

MeshGaussian pushforward_gaussian(const Tensor& mean, const Tensor& diag_cov,
                                  const Vandermonde& v) {
  const std::size_t m = v.matrix.cols();
  if (mean.size() != m || diag_cov.size() != m) {
    throw ShapeError("pushforward_gaussian: coefficient length " + std::to_string(mean.size()) +
                     " does not match Vandermonde columns " + std::to_string(m));
  }
  const std::size_t n = v.matrix.rows();
  Tensor mesh_mean = ad::reshape(ad::matmul(v.matrix, ad::reshape(mean, {m, 1})), {n});
  // V diag(c) V^T without forming diag(c).
  Tensor vs = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) vs.at(i, j) = v.matrix.at(i, j) * diag_cov[j];
  }
  Tensor cov = ad::matmul_nt(vs, v.matrix);
  return {std::move(mesh_mean), std::move(cov)};
}

Tensor chebyshev_fit(std::size_t order, const std::vector<double>& nodes,
                     const Tensor& nodal_values, Interval domain) {
  if (nodes.size() != nodal_values.size()) {
    throw ShapeError("chebyshev_fit: node and value counts differ");
  }
  Vandermonde v = chebyshev_vandermonde(order, nodes, domain);
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const auto m = static_cast<Eigen::Index>(order + 1);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      v.matrix.data(), n, m);
  Eigen::Map<const Eigen::VectorXd> b(nodal_values.data(), n);
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  Tensor out = Tensor::zeros({order + 1});
  for (std::size_t i = 0; i <= order; ++i) out[i] = c(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace wrvi
