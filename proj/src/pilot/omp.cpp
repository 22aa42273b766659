#include <cmath>
#include <limits>
#include <stdexcept>

#include "nfce/pilot.hpp"

namespace nfce::pilot {

PolarDictionary build_polar_dictionary(const ArrayGeometry& geom, int angle_grid_size,
                                       const std::vector<double>& distance_grid) {
  if (angle_grid_size < 1 || distance_grid.empty())
    throw std::invalid_argument("build_polar_dictionary: grids must be non-empty");
  PolarDictionary dict;
  const int total = angle_grid_size * static_cast<int>(distance_grid.size());
  dict.atoms.resize(geom.num_elements, total);
  dict.thetas.reserve(total);
  dict.distances.reserve(total);
  int col = 0;
  for (double r : distance_grid) {
    for (int i = 0; i < angle_grid_size; ++i) {
      const double theta = (2.0 * i - angle_grid_size + 1.0) / angle_grid_size;
      dict.atoms.col(col++) = steering_vector(geom, theta, r);
      dict.thetas.push_back(theta);
      dict.distances.push_back(r);
    }
  }
  return dict;
}

std::vector<double> default_distance_grid(double rayleigh, double r_min) {
  return {std::numeric_limits<double>::infinity(), rayleigh / 2.0, rayleigh / 4.0,
          rayleigh / 8.0, rayleigh / 16.0, r_min};
}

double mutual_coherence(const PolarDictionary& dict) {
  const CMatrix gram = dict.atoms.adjoint() * dict.atoms;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < gram.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) worst = std::max(worst, std::abs(gram(i, j)));
  return worst;
}

CMatrix omp_estimate(const PilotObservation& obs, const PolarDictionary& dict_rx,
                     const PolarDictionary& dict_tx, const OmpOptions& options, OmpTrace* trace) {
  if (dict_rx.size() == 0 || dict_tx.size() == 0) throw std::invalid_argument("omp_estimate: empty dictionary");
  const auto& w = obs.beams.combiner;
  const auto& f = obs.beams.precoder;
  if (dict_rx.atoms.rows() != w.rows() || dict_tx.atoms.rows() != f.rows())
    throw std::invalid_argument("omp_estimate: dictionary sizes do not match the arrays");

  const int nr = static_cast<int>(w.rows());
  const int nt = static_cast<int>(f.rows());
  CMatrix estimate = CMatrix::Zero(nr, nt);
  if (options.max_paths <= 0) return estimate;

  // Sensed atoms: Q vec(a_R a_T^H) = kron(F^T conj(a_T), W^H a_R).
  const CMatrix sensed_rx = w.adjoint() * dict_rx.atoms;
  const CMatrix sensed_tx = f.transpose() * dict_tx.atoms.conjugate();
  const Eigen::VectorXd norm_rx = sensed_rx.colwise().norm().transpose();
  const Eigen::VectorXd norm_tx = sensed_tx.colwise().norm().transpose();

  const CVector y = vec(obs.y) / obs.beams.pilot_amplitude();
  const double y_norm = y.norm();
  const int gr = dict_rx.size();
  const int gt = dict_tx.size();
  const Eigen::Index m = y.size();

  std::vector<int> sel_rx;
  std::vector<int> sel_tx;
  CMatrix basis(m, 0);
  CVector coeffs;
  CVector residual = y;

  for (int iter = 0; iter < options.max_paths; ++iter) {
    if (residual.norm() <= options.residual_tol * y_norm) break;

    // Correlation of every Kronecker atom with the residual: A_R^H R conj(A_T).
    const CMatrix r = unvec(residual, static_cast<int>(obs.y.rows()), static_cast<int>(obs.y.cols()));
    const CMatrix scores = sensed_rx.adjoint() * r * sensed_tx.conjugate();

    // Flat index j*gr + i; strict comparison keeps the lowest index on ties.
    double best = -1.0;
    int best_i = -1;
    int best_j = -1;
    for (int j = 0; j < gt; ++j) {
      if (norm_tx[j] == 0.0) continue;
      for (int i = 0; i < gr; ++i) {
        if (norm_rx[i] == 0.0) continue;
        const double s = std::abs(scores(i, j)) / (norm_rx[i] * norm_tx[j]);
        if (s > best) {
          best = s;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i < 0) break;

    sel_rx.push_back(best_i);
    sel_tx.push_back(best_j);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    for (Eigen::Index b = 0; b < sensed_tx.rows(); ++b)
      basis.col(basis.cols() - 1).segment(b * sensed_rx.rows(), sensed_rx.rows()) =
          sensed_tx(b, best_j) * sensed_rx.col(best_i);

    coeffs = basis.colPivHouseholderQr().solve(y);
    residual = y - basis * coeffs;
    if (trace) trace->residual_norms.push_back(residual.norm());
  }

  for (std::size_t s = 0; s < sel_rx.size(); ++s)
    estimate.noalias() += coeffs[static_cast<Eigen::Index>(s)] *
                          (dict_rx.atoms.col(sel_rx[s]) * dict_tx.atoms.col(sel_tx[s]).adjoint());
  if (trace) {
    trace->selected_rx = sel_rx;
    trace->selected_tx = sel_tx;
  }
  return estimate;
}

}  // namespace nfce::pilot
