#include <cmath>
#include <stdexcept>

#include "nfce/bench.hpp"

namespace nfce::bench {

double nmse(const CMatrix& truth, const CMatrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw std::invalid_argument("nmse: shape mismatch");
  const double power = truth.squaredNorm();
  if (!(power > 0.0)) throw std::domain_error("nmse: true channel is zero");
  return (truth - estimate).squaredNorm() / power;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

double spectral_efficiency(const CMatrix& truth, const CMatrix& estimate, double noise_power) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw std::invalid_argument("spectral_efficiency: shape mismatch");
  if (!(noise_power > 0.0)) throw std::domain_error("spectral_efficiency: noise power must be positive");
  const double est_power = estimate.squaredNorm();
  if (!(est_power > 0.0)) throw std::domain_error("spectral_efficiency: degenerate (all-zero) estimate");
  // tr(H_est H^H H H_est^H) = ||H_est H^H||_F^2
  const double signal = (estimate * truth.adjoint()).squaredNorm();
  return std::log2(1.0 + signal / (noise_power * est_power));
}

template <typename T>
ad::Tensor<T> to_tensor(const CMatrix& m) {
  const auto nr = static_cast<std::size_t>(m.rows());
  const auto nt = static_cast<std::size_t>(m.cols());
  std::vector<T> values(nr * nt * 2);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      values[k++] = static_cast<T>(m(r, c).real());
      values[k++] = static_cast<T>(m(r, c).imag());
    }
  return ad::Tensor<T>::from({nr, nt, 2}, std::move(values));
}

template <typename T>
CMatrix from_tensor(const ad::Tensor<T>& t) {
  if (t.rank() != 3 || t.dim(2) != 2) throw std::invalid_argument("from_tensor: expected [Nr, Nt, 2]");
  CMatrix m(static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
  const auto d = t.data();
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c, k += 2) m(r, c) = cd(d[k], d[k + 1]);
  return m;
}

template ad::Tensor<float> to_tensor<float>(const CMatrix&);
template ad::Tensor<double> to_tensor<double>(const CMatrix&);
template CMatrix from_tensor<float>(const ad::Tensor<float>&);
template CMatrix from_tensor<double>(const ad::Tensor<double>&);

}  // namespace nfce::bench
