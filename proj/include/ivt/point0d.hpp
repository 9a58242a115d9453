#ifndef IVT_POINT0D_HPP
#define IVT_POINT0D_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ivt/errors.hpp"

namespace ivt {

/// Thermo-visco-elastic rheological element: spring E with thermal
/// expansion, internal dashpot H2 in series, external dashpot H1 in
/// parallel, heat capacity C. Units: MPa, s, K.
struct DeviceParams {
  double E = 1000.0;      // Young's modulus [MPa]
  double alpha_T = 1e-5;  // thermal expansion [1/K]
  double H1 = 0.0;        // external dashpot viscosity [MPa s]
  double H2 = 10.0;       // internal dashpot viscosity [MPa s]
  double C = 1.0;         // heat capacity per unit volume [MPa/K]
  double theta0 = 293.0;  // reference temperature [K]
};

/// State (eps, q, eta, theta). After every accepted step the pair
/// (eta, theta) satisfies eta = -d_theta psi.
struct DeviceState0D {
  double eps = 0.0;
  double q = 0.0;
  double eta = 0.0;
  double theta = 293.0;
};

enum class DriveMode { Strain, Stress };
enum class Algo0D { Implicit, SemiExplicit };

struct StepControl {
  double tau = 1e-2;
  DriveMode drive = DriveMode::Strain;
  Algo0D algorithm = Algo0D::Implicit;
  double newton_tol = 1e-12;
  int max_iter = 50;
};

/// psi(eps,q,theta) with exact gradient and Hessian w.r.t. (eps,q,theta).
struct FreeEnergyEval {
  double psi;
  Eigen::Vector3d grad;
  Eigen::Matrix3d hess;
};

FreeEnergyEval free_energy(double eps, double q, double theta, const DeviceParams& p);

/// phi(deps,dq) = 1/2 H1 deps^2 + 1/2 H2 dq^2, degree-2 homogeneous,
/// so the dissipation is D = 2 phi.
struct DissipationEval {
  double phi;
  Eigen::Vector2d grad;
  Eigen::Matrix2d hess;
};

DissipationEval dissipation_potential(double deps, double dq, const DeviceParams& p);

/// theta-dot = -[d2_tt psi]^{-1} (deta + d2_tc psi . cdot).
double temperature_rate(const DeviceState0D& s, double deps, double dq, double deta,
                        const DeviceParams& p);

/// Residuals of (equilibrium, Biot, state equation, entropy evolution)
/// for a given state, rates and external stress.
Eigen::Vector4d check_governing_residuals(const DeviceState0D& s, double deps, double dq,
                                          double deta, double sigma_ext,
                                          const DeviceParams& p);

/// Diagnostics of one accepted step.
struct StepReport {
  int iterations = 0;
  double residual = 0.0;
  double dissipation_increment = 0.0;              // 2 tau phi(cdot^tau)
  Eigen::MatrixXd hessian;                         // of pi^tau at the solution
  std::vector<std::string> unknown_names;
};

/// One incremental update of the device. A vanishing internal viscosity
/// H2 == 0 means the internal dashpot is absent and q stays frozen
/// (the device degenerates to a thermoelastic spring).
class DeviceStepper {
public:
  DeviceStepper(const DeviceParams& p, const StepControl& c) : p_(p), c_(c) {}

  /// load = prescribed eps(t_{n+1}) in strain-driven mode, sigma_ext(t_{n+1})
  /// in stress-driven mode.
  DeviceState0D step(const DeviceState0D& sn, double load, StepReport* report = nullptr) const;

  const DeviceParams& params() const { return p_; }
  const StepControl& control() const { return c_; }

  /// Work-conjugate stress at the current state of a converged step.
  double stress(const DeviceState0D& sn, const DeviceState0D& s) const;

private:
  DeviceState0D step_implicit(const DeviceState0D& sn, double load, StepReport* rep) const;
  DeviceState0D step_semi_explicit(const DeviceState0D& sn, double load, StepReport* rep) const;

  DeviceParams p_;
  StepControl c_;
};

/// Closed forms of the entropy-based canonical principle for degenerate
/// single-element devices, used as verification oracles only:
/// internal energy e(eta) = C theta0 (exp(eta/C) - 1) of the pure heat
/// store, and v(deps, deta; theta) = -theta^2/(2 H) (deta/deps)^2 of a
/// single linear dashpot.
double canonical_internal_energy(double eta, const DeviceParams& p);
double canonical_dissipation_dual(double deps, double deta, double theta, double H);

} // namespace ivt

#endif
