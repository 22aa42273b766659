#include <stdexcept>
#include <string>

#include "nfce/pilot.hpp"

namespace nfce::pilot {
namespace {

bool is_unitary(const CMatrix& m) {
  if (m.rows() != m.cols()) return false;
  const CMatrix gram = m.adjoint() * m;
  return (gram - CMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() < 1e-12;
}

// (B B^H)^{-1}, with a rank check that names which side is deficient.
CMatrix gram_inverse(const CMatrix& b, const char* side) {
  const CMatrix g = b * b.adjoint();
  Eigen::FullPivLU<CMatrix> lu(g);
  if (lu.rank() < g.rows())
    throw std::invalid_argument(std::string("ls_estimate: sensing matrix Q is rank deficient; ") + side +
                                " has rank " + std::to_string(lu.rank()) + " < " + std::to_string(g.rows()) +
                                " antennas (need M*M >= Nt*Nr with both beam sets spanning their arrays)");
  return lu.inverse();
}

}  // namespace

CMatrix ls_estimate(const PilotObservation& obs) {
  const auto& w = obs.beams.combiner;
  const auto& f = obs.beams.precoder;
  const double amp = obs.beams.pilot_amplitude();
  if (obs.y.rows() != w.cols() || obs.y.cols() != f.cols())
    throw std::invalid_argument("ls_estimate: observation and beam dimensions disagree");

  if (is_unitary(w) && is_unitary(f)) return (w * obs.y * f.adjoint()) / amp;

  // Q^H Q = conj(F F^H) kron (W W^H), so the normal equations factor per side.
  const CMatrix wi = gram_inverse(w, "combiner W");
  const CMatrix fi = gram_inverse(f, "precoder F");
  return (wi * w * obs.y * f.adjoint() * fi) / amp;
}

CMatrix fit_channel_covariance(const std::vector<CMatrix>& samples) {
  if (samples.empty()) throw std::invalid_argument("fit_channel_covariance: no samples");
  const Eigen::Index n = samples.front().size();
  CMatrix stacked(n, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].size() != n) throw std::invalid_argument("fit_channel_covariance: inconsistent shapes");
    stacked.col(static_cast<Eigen::Index>(k)) = vec(samples[k]);
  }
  CMatrix r = (stacked * stacked.adjoint()) / static_cast<double>(samples.size());
  return (r + r.adjoint()) / 2.0;
}

LmmseFilter::LmmseFilter(const CMatrix& covariance, double noise_power, double pilot_power) {
  if (covariance.rows() != covariance.cols()) throw std::invalid_argument("lmmse: covariance not square");
  if (!(pilot_power > 0.0)) throw std::invalid_argument("lmmse: pilot power must be positive");
  CMatrix reg = covariance;
  reg.diagonal().array() += noise_power / pilot_power;
  // weights = R reg^{-1}; reg is Hermitian so solve reg X = R^H = R and take X^H.
  Eigen::LDLT<CMatrix> ldlt(reg);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw std::runtime_error("lmmse: regularized covariance is singular");
  weights_ = ldlt.solve(covariance).adjoint();
}

CMatrix LmmseFilter::apply(const CMatrix& ls) const {
  if (ls.size() != weights_.cols()) throw std::invalid_argument("lmmse: estimate size mismatch");
  return unvec(weights_ * vec(ls), static_cast<int>(ls.rows()), static_cast<int>(ls.cols()));
}

CMatrix lmmse_estimate(const PilotObservation& obs, const CMatrix& covariance) {
  const CMatrix ls = ls_estimate(obs);
  return LmmseFilter(covariance, obs.noise_power, obs.beams.pilot_power).apply(ls);
}

}  // namespace nfce::pilot
