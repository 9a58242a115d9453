#ifndef IVT_DAMAGE_BAR_HPP
#define IVT_DAMAGE_BAR_HPP

#include <Eigen/Dense>
#include <vector>

#include "ivt/errors.hpp"
#include "ivt/tensor.hpp"

namespace ivt {

/// Thermo-gradient-damage at finite strain. Units: MPa, mm, s, K.
struct DamageParams {
  double mu = 80.0;       // shear modulus [MPa]
  double delta = 3.0;     // weak compressibility exponent
  double alpha_T = 1e-5;  // volumetric thermal expansion [1/K]
  double C_heat = 1.0;    // heat capacity [MPa/K]
  double theta0 = 293.0;
  double c0 = 1.0;        // damage threshold at theta0 [MPa]
  double w_c = 1e-3;      // thermal threshold softening [1/K]
  double l = 1.0;         // length scale [mm]
  double k_b = 1.0;       // bulk conductivity
  double eta_f = 0.0;     // viscosity [MPa s]; 0 means rate-independent

  double threshold(double theta) const { return c0 * (1.0 - w_c * (theta - theta0)); }
};

/// psi = g(d) psi_e(C^e) + psi_theta with C^e = Jtheta^{-2/3} C.
/// Returns the energy, the damage-degraded second Piola-Kirchhoff stress
/// S^e = 2 d_C psi, the damage driving force beta^e = d_d psi and
/// eta_tilde = d_theta psi.
struct DamageEnergyEval {
  double psi;
  SymTensor3 S_e;
  double beta_e;
  double eta_tilde;
};

DamageEnergyEval damage_free_energy(const SymTensor3& C, double d, double theta,
                                    const DamageParams& p);

/// f = beta - c(theta).
double damage_threshold(double beta, double theta, const DamageParams& p);

enum class DamageMode { KKT, Viscous };
enum class DamageAlgo { Implicit, SemiExplicit };

struct DamageBarOptions {
  double tau = 1e-2;
  DamageMode mode = DamageMode::KKT;
  DamageAlgo algorithm = DamageAlgo::SemiExplicit;
  double newton_tol = 1e-10;
  int max_iter = 40;
  int max_active_set_cycles = 30;
  bool conduction = false;
  int imperfection_element = -1;    // element with a weakened threshold
  double imperfection_factor = 1.0; // multiplies c0 there (e.g. 0.97)
};

/// Nodal fields plus per-element (quadrature point) thermal history.
struct DamageBarState {
  std::vector<double> u, d;       // nodes
  std::vector<double> eta, theta; // elements
};

struct DamageBarReport {
  int newton_iterations = 0;
  int active_set_cycles = 0;
  double residual = 0.0;
  double min_dissipation_increment = 0.0;
  double complementarity = 0.0;
  double tangent_asymmetry = 0.0;
};

/// 1-D bar under uniaxial strain, linear elements for u and d, one-point
/// quadrature, nodal irreversibility d >= d_n. The dissipative driving
/// force beta is eliminated element-wise; its condensed form is
/// c(theta_n) + (eta_f/tau) s Delta d on evolving points.
class DamageBar {
public:
  DamageBar(double length, int n_elem, const DamageParams& p);

  int n_nodes() const { return n_elem_ + 1; }
  int n_elements() const { return n_elem_; }
  double node_x(int a) const { return a * h_; }
  const DamageParams& params() const { return p_; }

  DamageBarState initial_state() const;

  /// Solve one increment with the bar stretched to u(L) = u_end.
  DamageBarState step(const DamageBarState& sn, double u_end, const DamageBarOptions& o,
                      DamageBarReport* rep = nullptr) const;

  /// Assembled incremental potential, residual and tangent at given nodal
  /// fields (u, d stacked per node) for the given history; exposed for the
  /// variational-exactness checks.
  void assemble(const Eigen::VectorXd& x, const DamageBarState& sn,
                const DamageBarOptions& o, double& energy, Eigen::VectorXd& residual,
                Eigen::MatrixXd* tangent) const;

  /// beta^e at element midpoints for output.
  std::vector<double> beta_e_field(const DamageBarState& s) const;
  /// Reaction force at the loaded end node.
  double reaction(const DamageBarState& s, const DamageBarState& sn,
                  const DamageBarOptions& o) const;

private:
  double elem_threshold(int e, double theta) const;

  double L_, h_;
  int n_elem_;
  DamageParams p_;
  DamageBarOptions last_opts_;
};

} // namespace ivt

#endif
