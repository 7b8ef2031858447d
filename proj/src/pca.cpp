#include "dtn/pca.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace dtn {

PcaProjection pca_project(const Tensor& features, std::size_t components) {
  if (features.rank() != 2) throw ShapeError("pca expects [N, f], got " + shape_string(features.shape()));
  const std::size_t n = features.dim(0), f = features.dim(1);
  if (components == 0 || n <= components || components > f) {
    throw std::invalid_argument("pca needs 0 < components < N and components <= f");
  }
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const Matrix> x(features.data().data(), static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(f));
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca eigen-decomposition failed");

  PcaProjection out;
  out.components = Tensor({components, f});
  out.projected = Tensor({n, components});
  out.mean.assign(mu.data(), mu.data() + f);
  for (std::size_t c = 0; c < components; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(f - 1 - c);  // ascending order
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.variance.push_back(std::max(0.0, eig.eigenvalues()(col)));
    const Eigen::VectorXd proj = centered * v;
    for (std::size_t j = 0; j < f; ++j) out.components.data()[c * f + j] = v(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n; ++i) {
      out.projected.data()[i * components + c] = proj(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

}  // namespace dtn
