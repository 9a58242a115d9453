#ifndef IVT_CAHN_HILLIARD_HPP
#define IVT_CAHN_HILLIARD_HPP

#include <Eigen/Dense>
#include <vector>

#include "ivt/errors.hpp"

namespace ivt {

/// Cahn-Hilliard diffusion coupled with temperature evolution on a 1-D
/// staggered grid: concentration, entropy and temperature live on cells,
/// the species flux on faces. Units: MPa, mm, s, K.
struct CHParams {
  double A = 1.0;       // threshold energy [MPa]
  double B = 3.0;       // mixing energy [MPa]; nonconvex for B > 2A
  double D = 1e-2;      // interface parameter [MPa mm^2]
  double M0 = 1.0;      // mobility prefactor [mm^2/(MPa s)]
  double Q = 0.0;       // mobility activation, M(theta) = M0 exp(-Q(1/theta - 1/theta0))
  double k = 1.0;       // thermal conductivity [MPa mm^2/(s K)]
  double C = 1.0;       // heat capacity [MPa/K]
  double theta0 = 293.0;

  double mobility(double theta) const;
};

enum class CHBoundary { Periodic, NoFlux, PrescribedMu };

struct CHGridState {
  int N = 0;
  double L = 1.0;
  double dx = 0.0;
  CHBoundary bc = CHBoundary::Periodic;
  std::vector<double> c;     // N cells
  std::vector<double> flux;  // N+1 faces (face N aliases face 0 when periodic)
  std::vector<double> eta;   // N cells
  std::vector<double> theta; // N cells
  double mu_bar_left = 0.0;  // boundary fluid potential (PrescribedMu only)
  double mu_bar_right = 0.0;

  static CHGridState uniform(int N, double L, double c0, CHBoundary bc, double theta0);
  double cell_x(int i) const { return (i + 0.5) * dx; }
  double total_species() const; // sum c dx
};

enum class CHAlgo { Implicit, SemiExplicit };

struct CHStepOptions {
  double tau = 1e-3;
  bool thermal_coupling = true;
  CHAlgo algorithm = CHAlgo::Implicit;
  double newton_tol = 1e-11;
  int max_iter = 30;
  bool dirichlet_T = false; // implicit mode only: pin T at the two end cells
  double T_left = 0.0;
  double T_right = 0.0;
  double heat_source = 0.0; // volumetric r-bar, uniform
};

/// psi_l(c) = A[c ln c + (1-c) ln(1-c)] + B c (1-c) and derivatives.
struct CHLocalEnergy {
  double psi, dpsi, ddpsi;
};
CHLocalEnergy local_energy(double c, const CHParams& p);

/// Discrete free energy sum(psi_l) dx + sum(D/2 |grad c|^2) dx with
/// BC-consistent stencils.
double ch_energy(const CHGridState& g, const CHParams& p);

/// mu_i = dE/dc_i / dx: the variational chemical potential with the
/// 3-point Laplacian and BC-consistent ghost values.
std::vector<double> chemical_potential(const CHGridState& g, const CHParams& p);

struct CHStepReport {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> dissipation_increment; // per cell, intrinsic part
};

/// One incremental update. Throws ConcentrationOutOfRange when the step
/// leaves (0,1) (caller halves tau) and NewtonDivergence on solver failure.
CHGridState step_ch(const CHGridState& gn, const CHParams& p, const CHStepOptions& o,
                    CHStepReport* report = nullptr);

} // namespace ivt

#endif
