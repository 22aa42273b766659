#pragma once

// Pilot observation model and classical estimators (LS, LMMSE, polar OMP).

#include <limits>
#include <vector>

#include "nfce/channel.hpp"

namespace nfce::pilot {

enum class BeamKind { IdentitySubset, Dft };

struct BeamConfig {
  CMatrix combiner;  // W, Nr x Mr, unit-norm columns
  CMatrix precoder;  // F, Nt x Mt, unit-norm columns
  double pilot_power = 1.0;

  /// S = sqrt(P_t) I_Mt.
  double pilot_amplitude() const { return std::sqrt(pilot_power); }
};

BeamConfig make_beams(int nr, int nt, int mr, int mt, double pilot_power, BeamKind kind);

struct PilotObservation {
  CMatrix y;  // Mr x Mt
  BeamConfig beams;
  double noise_power = 0.0;
};

/// Y = W^H H F S + W^H N, N with i.i.d. CN(0, sigma^2) entries.
PilotObservation observe(const CMatrix& h, const BeamConfig& beams, double noise_power, Rng& rng);

/// Q = F^T kron W^H, materialized. Only for small systems and checks.
CMatrix sensing_matrix(const BeamConfig& beams);

/// Column-major vec().
CVector vec(const CMatrix& m);
CMatrix unvec(const CVector& v, int rows, int cols);

/// (Q^H Q)^{-1} Q^H vec(Y) / sqrt(P_t), evaluated in Kronecker-factored form.
/// Throws std::invalid_argument when Q lacks full column rank.
CMatrix ls_estimate(const PilotObservation& obs);

/// (1/K) sum vec(H) vec(H)^H, symmetrized.
CMatrix fit_channel_covariance(const std::vector<CMatrix>& samples);

/// Precomputes R (R + (sigma^2/P_t) I)^{-1} for one noise level so a test set
/// can be filtered without refactoring.
class LmmseFilter {
 public:
  LmmseFilter(const CMatrix& covariance, double noise_power, double pilot_power);
  CMatrix apply(const CMatrix& ls) const;
  const CMatrix& weights() const { return weights_; }

 private:
  CMatrix weights_;
};

CMatrix lmmse_estimate(const PilotObservation& obs, const CMatrix& covariance);

/// Steering-vector dictionary sampled over (theta, r). r = +inf marks a
/// far-field atom.
struct PolarDictionary {
  CMatrix atoms;  // N x G
  std::vector<double> thetas;
  std::vector<double> distances;
  int size() const { return static_cast<int>(atoms.cols()); }
};

/// Uniform grid in theta over (-1, 1) crossed with the given distances.
/// Atom index = distance_index * angle_grid_size + angle_index.
PolarDictionary build_polar_dictionary(const ArrayGeometry& geom, int angle_grid_size,
                                       const std::vector<double>& distance_grid);

/// {inf, dR/2, dR/4, dR/8, dR/16, r_min}.
std::vector<double> default_distance_grid(double rayleigh, double r_min);

/// Largest |<a_i, a_j>| over distinct unit-norm atoms.
double mutual_coherence(const PolarDictionary& dict);

struct OmpOptions {
  int max_paths = 12;
  double residual_tol = 1e-2;
};

struct OmpTrace {
  std::vector<int> selected_rx;
  std::vector<int> selected_tx;
  std::vector<double> residual_norms;  // after each iteration
};

CMatrix omp_estimate(const PilotObservation& obs, const PolarDictionary& dict_rx,
                     const PolarDictionary& dict_tx, const OmpOptions& options,
                     OmpTrace* trace = nullptr);

}  // namespace nfce::pilot
