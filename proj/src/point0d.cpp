#include "ivt/point0d.hpp"

#include <cmath>

namespace ivt {

FreeEnergyEval free_energy(double eps, double q, double theta, const DeviceParams& p) {
  if (!(theta > 0.0)) throw NonPositiveTemperature("free_energy: theta <= 0");
  FreeEnergyEval e;
  const double de = eps - q;
  const double dt = theta - p.theta0;
  const double lt = std::log(theta / p.theta0);
  e.psi = 0.5 * p.E * de * de + p.E * p.alpha_T * (q - eps) * dt + p.C * (dt - theta * lt);
  e.grad[0] = p.E * de - p.E * p.alpha_T * dt;
  e.grad[1] = -p.E * de + p.E * p.alpha_T * dt;
  e.grad[2] = p.E * p.alpha_T * (q - eps) - p.C * lt;
  e.hess.setZero();
  e.hess(0, 0) = p.E;
  e.hess(0, 1) = e.hess(1, 0) = -p.E;
  e.hess(1, 1) = p.E;
  e.hess(0, 2) = e.hess(2, 0) = -p.E * p.alpha_T;
  e.hess(1, 2) = e.hess(2, 1) = p.E * p.alpha_T;
  e.hess(2, 2) = -p.C / theta;
  return e;
}

DissipationEval dissipation_potential(double deps, double dq, const DeviceParams& p) {
  DissipationEval d;
  d.phi = 0.5 * p.H1 * deps * deps + 0.5 * p.H2 * dq * dq;
  d.grad << p.H1 * deps, p.H2 * dq;
  d.hess << p.H1, 0.0, 0.0, p.H2;
  return d;
}

double temperature_rate(const DeviceState0D& s, double deps, double dq, double deta,
                        const DeviceParams& p) {
  FreeEnergyEval e = free_energy(s.eps, s.q, s.theta, p);
  double coupling = e.hess(2, 0) * deps + e.hess(2, 1) * dq;
  return -(deta + coupling) / e.hess(2, 2);
}

Eigen::Vector4d check_governing_residuals(const DeviceState0D& s, double deps, double dq,
                                          double deta, double sigma_ext,
                                          const DeviceParams& p) {
  FreeEnergyEval e = free_energy(s.eps, s.q, s.theta, p);
  DissipationEval d = dissipation_potential(deps, dq, p);
  Eigen::Vector4d r;
  r[0] = e.grad[0] + d.grad[0] - sigma_ext;
  r[1] = e.grad[1] + d.grad[1];
  r[2] = s.eta + e.grad[2];
  double diss = d.grad[0] * deps + d.grad[1] * dq;
  r[3] = deta - diss / s.theta;
  return r;
}

namespace {

struct Unknowns {
  bool has_eps;
  bool has_q;
  int n;       // total unknown count
  int i_eps, i_q, i_eta, i_theta, i_T;
};

Unknowns layout_implicit(const DeviceParams& p, const StepControl& c) {
  Unknowns u{};
  u.has_eps = (c.drive == DriveMode::Stress);
  u.has_q = (p.H2 > 0.0);
  int k = 0;
  u.i_eps = u.has_eps ? k++ : -1;
  u.i_q = u.has_q ? k++ : -1;
  u.i_eta = k++;
  u.i_theta = k++;
  u.i_T = k++;
  u.n = k;
  return u;
}

} // namespace

DeviceState0D DeviceStepper::step(const DeviceState0D& sn, double load,
                                  StepReport* report) const {
  if (c_.algorithm == Algo0D::Implicit) return step_implicit(sn, load, report);
  return step_semi_explicit(sn, load, report);
}

double DeviceStepper::stress(const DeviceState0D& sn, const DeviceState0D& s) const {
  FreeEnergyEval e = free_energy(s.eps, s.q, s.theta, p_);
  double r = (c_.algorithm == Algo0D::Implicit) ? s.theta / sn.theta : 1.0;
  return e.grad[0] + r * r * p_.H1 * (s.eps - sn.eps) / c_.tau;
}

DeviceState0D DeviceStepper::step_implicit(const DeviceState0D& sn, double load,
                                           StepReport* rep) const {
  const Unknowns u = layout_implicit(p_, c_);
  const double tau = c_.tau;
  const double thn = sn.theta;

  // unknown vector x, initialized at the previous state
  Eigen::VectorXd x(u.n);
  double eps_fix = (c_.drive == DriveMode::Strain) ? load : sn.eps;
  if (u.has_eps) x[u.i_eps] = sn.eps;
  if (u.has_q) x[u.i_q] = sn.q;
  x[u.i_eta] = sn.eta;
  x[u.i_theta] = sn.theta;
  x[u.i_T] = sn.theta;

  auto residual = [&](const Eigen::VectorXd& z, Eigen::VectorXd& R, Eigen::MatrixXd* J) {
    double eps = u.has_eps ? z[u.i_eps] : eps_fix;
    double q = u.has_q ? z[u.i_q] : sn.q;
    double eta = z[u.i_eta];
    double theta = z[u.i_theta];
    double T = z[u.i_T];
    double deps = (eps - sn.eps) / tau;
    double dq = (q - sn.q) / tau;
    double r = T / thn;

    FreeEnergyEval e = free_energy(eps, q, theta, p_);
    DissipationEval d = dissipation_potential(deps, dq, p_);

    R.setZero(u.n);
    if (u.has_eps) R[u.i_eps] = e.grad[0] + r * r * p_.H1 * deps - load;
    if (u.has_q) R[u.i_q] = e.grad[1] + r * r * p_.H2 * dq;
    R[u.i_eta] = theta - T;
    R[u.i_theta] = e.grad[2] + eta;
    R[u.i_T] = -(eta - sn.eta) + 2.0 * tau * T / (thn * thn) * d.phi;

    if (J) {
      J->setZero(u.n, u.n);
      auto& M = *J;
      if (u.has_eps) {
        M(u.i_eps, u.i_eps) = e.hess(0, 0) + r * r * p_.H1 / tau;
        if (u.has_q) M(u.i_eps, u.i_q) = M(u.i_q, u.i_eps) = e.hess(0, 1);
        M(u.i_eps, u.i_theta) = M(u.i_theta, u.i_eps) = e.hess(0, 2);
        M(u.i_eps, u.i_T) = M(u.i_T, u.i_eps) = 2.0 * T / (thn * thn) * p_.H1 * deps;
      }
      if (u.has_q) {
        M(u.i_q, u.i_q) = e.hess(1, 1) + r * r * p_.H2 / tau;
        M(u.i_q, u.i_theta) = M(u.i_theta, u.i_q) = e.hess(1, 2);
        M(u.i_q, u.i_T) = M(u.i_T, u.i_q) = 2.0 * T / (thn * thn) * p_.H2 * dq;
      }
      M(u.i_eta, u.i_theta) = M(u.i_theta, u.i_eta) = 1.0;
      M(u.i_eta, u.i_T) = M(u.i_T, u.i_eta) = -1.0;
      M(u.i_theta, u.i_theta) = e.hess(2, 2);
      M(u.i_T, u.i_T) = 2.0 * tau / (thn * thn) * d.phi;
    }
  };

  Eigen::VectorXd R(u.n);
  Eigen::MatrixXd J(u.n, u.n);
  residual(x, R, &J);
  double rn0 = R.norm();
  double rn = rn0;
  int it = 0;
  for (; it < c_.max_iter && rn > c_.newton_tol * (1.0 + rn0); ++it) {
    Eigen::VectorXd dx = J.fullPivLu().solve(-R);
    // backtracking: keep theta, T positive and reduce the residual
    double s = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd xt = x + s * dx;
      if (xt[u.i_theta] > 0.0 && xt[u.i_T] > 0.0) {
        Eigen::VectorXd Rt(u.n);
        residual(xt, Rt, nullptr);
        if (Rt.norm() < rn || Rt.norm() < c_.newton_tol * (1.0 + rn0)) {
          x = xt;
          ok = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!ok) {
      // stagnation at the round-off floor counts as converged
      if (rn <= 1e-9 * (1.0 + rn0)) break;
      throw NewtonDivergence("0d implicit step: line search failed");
    }
    residual(x, R, &J);
    rn = R.norm();
  }
  if (rn > 1e-9 * (1.0 + rn0))
    throw NewtonDivergence("0d implicit step: no convergence in max_iter");

  DeviceState0D s;
  s.eps = u.has_eps ? x[u.i_eps] : eps_fix;
  s.q = u.has_q ? x[u.i_q] : sn.q;
  s.eta = x[u.i_eta];
  s.theta = x[u.i_theta];
  if (rep) {
    rep->iterations = it;
    rep->residual = rn;
    DissipationEval d =
        dissipation_potential((s.eps - sn.eps) / c_.tau, (s.q - sn.q) / c_.tau, p_);
    rep->dissipation_increment = 2.0 * c_.tau * d.phi;
    rep->hessian = J;
    rep->unknown_names.clear();
    if (u.has_eps) rep->unknown_names.push_back("eps");
    if (u.has_q) rep->unknown_names.push_back("q");
    rep->unknown_names.insert(rep->unknown_names.end(), {"eta", "theta", "T"});
  }
  return s;
}

DeviceState0D DeviceStepper::step_semi_explicit(const DeviceState0D& sn, double load,
                                                StepReport* rep) const {
  const double tau = c_.tau;
  const bool has_eps = (c_.drive == DriveMode::Stress);
  const bool has_q = (p_.H2 > 0.0);
  int n = (has_eps ? 1 : 0) + (has_q ? 1 : 0) + 1;
  int i_eps = has_eps ? 0 : -1;
  int i_q = has_q ? (has_eps ? 1 : 0) : -1;
  int i_theta = n - 1;

  double eps_fix = (c_.drive == DriveMode::Strain) ? load : sn.eps;
  Eigen::VectorXd x(n);
  if (has_eps) x[i_eps] = sn.eps;
  if (has_q) x[i_q] = sn.q;
  x[i_theta] = sn.theta;

  auto residual = [&](const Eigen::VectorXd& z, Eigen::VectorXd& R, Eigen::MatrixXd* J) {
    double eps = has_eps ? z[i_eps] : eps_fix;
    double q = has_q ? z[i_q] : sn.q;
    double theta = z[i_theta];
    double deps = (eps - sn.eps) / tau;
    double dq = (q - sn.q) / tau;
    FreeEnergyEval e = free_energy(eps, q, theta, p_);
    R.setZero(n);
    if (has_eps) R[i_eps] = e.grad[0] + p_.H1 * deps - load;
    if (has_q) R[i_q] = e.grad[1] + p_.H2 * dq;
    R[i_theta] = e.grad[2] + sn.eta;
    if (J) {
      J->setZero(n, n);
      auto& M = *J;
      if (has_eps) {
        M(i_eps, i_eps) = e.hess(0, 0) + p_.H1 / tau;
        if (has_q) M(i_eps, i_q) = M(i_q, i_eps) = e.hess(0, 1);
        M(i_eps, i_theta) = M(i_theta, i_eps) = e.hess(0, 2);
      }
      if (has_q) {
        M(i_q, i_q) = e.hess(1, 1) + p_.H2 / tau;
        M(i_q, i_theta) = M(i_theta, i_q) = e.hess(1, 2);
      }
      M(i_theta, i_theta) = e.hess(2, 2);
    }
  };

  Eigen::VectorXd R(n);
  Eigen::MatrixXd J(n, n);
  residual(x, R, &J);
  double rn0 = R.norm();
  double rn = rn0;
  int it = 0;
  for (; it < c_.max_iter && rn > c_.newton_tol * (1.0 + rn0); ++it) {
    Eigen::VectorXd dx = J.fullPivLu().solve(-R);
    double s = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd xt = x + s * dx;
      if (xt[i_theta] > 0.0) {
        Eigen::VectorXd Rt(n);
        residual(xt, Rt, nullptr);
        if (Rt.norm() < rn || Rt.norm() < c_.newton_tol * (1.0 + rn0)) {
          x = xt;
          ok = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!ok) {
      if (rn <= 1e-9 * (1.0 + rn0)) break;
      throw NewtonDivergence("0d semi-explicit predictor: line search failed");
    }
    residual(x, R, &J);
    rn = R.norm();
  }
  if (rn > 1e-9 * (1.0 + rn0))
    throw NewtonDivergence("0d semi-explicit predictor: no convergence in max_iter");

  DeviceState0D s;
  s.eps = has_eps ? x[i_eps] : eps_fix;
  s.q = has_q ? x[i_q] : sn.q;
  s.theta = x[i_theta];
  // entropy corrector: the unscaled, algorithmically correct dissipation
  DissipationEval d = dissipation_potential((s.eps - sn.eps) / tau, (s.q - sn.q) / tau, p_);
  s.eta = sn.eta + tau / sn.theta * 2.0 * d.phi;
  if (rep) {
    rep->iterations = it;
    rep->residual = rn;
    rep->dissipation_increment = 2.0 * tau * d.phi;
    rep->hessian = J;
    rep->unknown_names.clear();
    if (has_eps) rep->unknown_names.push_back("eps");
    if (has_q) rep->unknown_names.push_back("q");
    rep->unknown_names.push_back("theta");
  }
  return s;
}

double canonical_internal_energy(double eta, const DeviceParams& p) {
  return p.C * p.theta0 * (std::exp(eta / p.C) - 1.0);
}

double canonical_dissipation_dual(double deps, double deta, double theta, double H) {
  double r = deta / deps;
  return -theta * theta / (2.0 * H) * r * r;
}

} // namespace ivt
