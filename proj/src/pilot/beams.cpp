#include <cmath>
#include <stdexcept>
#include <string>

#include "nfce/pilot.hpp"

namespace nfce::pilot {
namespace {

CMatrix beam_matrix(int n, int m, BeamKind kind) {
  CMatrix b = CMatrix::Zero(n, m);
  if (kind == BeamKind::IdentitySubset) {
    for (int i = 0; i < m; ++i) b(i, i) = 1.0;
    return b;
  }
  // Columns are DFT atoms exp(j 2 pi k p / n) / sqrt(n); m < n takes the first m.
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int p = 0; p < m; ++p) {
    for (int k = 0; k < n; ++k) {
      const long long idx = (static_cast<long long>(k) * p) % n;
      b(k, p) = std::polar(scale, 2.0 * kPi * static_cast<double>(idx) / n);
    }
  }
  return b;
}

}  // namespace

BeamConfig make_beams(int nr, int nt, int mr, int mt, double pilot_power, BeamKind kind) {
  if (nr < 1 || nt < 1 || mr < 1 || mt < 1)
    throw std::invalid_argument("make_beams: dimensions must be positive");
  if (mr > nr || mt > nt)
    throw std::invalid_argument("make_beams: need Mr <= Nr and Mt <= Nt (got Mr=" + std::to_string(mr) +
                                ", Nr=" + std::to_string(nr) + ", Mt=" + std::to_string(mt) +
                                ", Nt=" + std::to_string(nt) + ")");
  if (!(pilot_power > 0.0)) throw std::invalid_argument("make_beams: pilot power must be positive");
  return BeamConfig{beam_matrix(nr, mr, kind), beam_matrix(nt, mt, kind), pilot_power};
}

PilotObservation observe(const CMatrix& h, const BeamConfig& beams, double noise_power, Rng& rng) {
  if (h.rows() != beams.combiner.rows() || h.cols() != beams.precoder.rows())
    throw std::invalid_argument("observe: channel and beam dimensions disagree");
  if (noise_power < 0.0) throw std::invalid_argument("observe: negative noise power");

  CMatrix y = beams.pilot_amplitude() * (beams.combiner.adjoint() * h * beams.precoder);
  if (noise_power > 0.0) {
    // One receive noise vector per transmit beam, drawn column by column.
    CMatrix n(h.rows(), beams.precoder.cols());
    for (Eigen::Index p = 0; p < n.cols(); ++p)
      for (Eigen::Index i = 0; i < n.rows(); ++i) n(i, p) = complex_normal(rng, noise_power);
    y.noalias() += beams.combiner.adjoint() * n;
  }
  return PilotObservation{std::move(y), beams, noise_power};
}

CMatrix sensing_matrix(const BeamConfig& beams) {
  const CMatrix ft = beams.precoder.transpose();
  const CMatrix wh = beams.combiner.adjoint();
  CMatrix q(ft.rows() * wh.rows(), ft.cols() * wh.cols());
  for (Eigen::Index i = 0; i < ft.rows(); ++i)
    for (Eigen::Index j = 0; j < ft.cols(); ++j)
      q.block(i * wh.rows(), j * wh.cols(), wh.rows(), wh.cols()) = ft(i, j) * wh;
  return q;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

CMatrix unvec(const CVector& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

}  // namespace nfce::pilot
