#include "ivt/damage_bar.hpp"

#include <cmath>

#include "ivt/linsolve.hpp"

namespace ivt {

DamageEnergyEval damage_free_energy(const SymTensor3& C, double d, double theta,
                                    const DamageParams& p) {
  if (!(theta > 0.0)) throw NonPositiveTemperature("damage_free_energy: theta <= 0");
  Mat3 Cm = C.mat();
  double detC = Cm.determinant();
  if (!(detC > 0.0)) throw NonPositiveJacobian("damage_free_energy: det C <= 0");

  double a = std::exp(-2.0 * p.alpha_T * (theta - p.theta0)); // Jtheta^{-2/3}
  double b = std::exp(-6.0 * p.alpha_T * (theta - p.theta0)); // Jtheta^{-2}
  double trCe = a * (Cm(0, 0) + Cm(1, 1) + Cm(2, 2));
  double pw = std::pow(b * detC, -0.5 * p.delta); // (det C^e)^{-delta/2}
  double psi_e = 0.5 * p.mu * (trCe - 3.0) + p.mu / p.delta * (pw - 1.0);
  double g = (1.0 - d) * (1.0 - d);

  double lt = std::log(theta / p.theta0);
  DamageEnergyEval e;
  e.psi = g * psi_e + p.C_heat * ((theta - p.theta0) - theta * lt);
  e.S_e = SymTensor3::from(g * (p.mu * a * Mat3::Identity() - p.mu * pw * Cm.inverse()));
  e.beta_e = -2.0 * (1.0 - d) * psi_e;
  e.eta_tilde = -g * p.alpha_T * p.mu * (trCe - 3.0 * pw) - p.C_heat * lt;
  return e;
}

double damage_threshold(double beta, double theta, const DamageParams& p) {
  return beta - p.threshold(theta);
}

namespace {

// condensed quadrature-point evaluation over y = (C1, dbar, grad d) with the
// temperature eliminated by a scalar Newton on dPsi/dtheta = 0
struct QpEval {
  double value;
  Eigen::Vector3d grad;
  Eigen::Matrix3d hess;
  double theta_star;
  double beta_star; // condensed driving force, valid where dbar > dbar_n
  double psi_e;     // undegraded elastic energy at theta_star
};

struct QpInput {
  double C1, dbar, gd;
  double dbar_n, gd_n, eta_n, theta_n;
  double c_e; // element threshold at theta_n (imperfection included)
};

QpEval qp_eval(const QpInput& in, const DamageParams& p, const DamageBarOptions& o) {
  if (!(in.C1 > 0.0)) throw NonPositiveJacobian("damage bar: element inverted");
  const bool imp = (o.algorithm == DamageAlgo::Implicit);
  const double tau = o.tau;
  const double visc = (o.mode == DamageMode::Viscous) ? p.eta_f : 0.0;
  const double dd = in.dbar - in.dbar_n;
  const double phi_grad = 0.5 * p.mu * p.l * p.l * (in.gd * in.gd - in.gd_n * in.gd_n);

  auto pieces = [&](double th, double* out) {
    // out: psi_e, dpsi_dC1, ddpsi_dC1C1, dpsi_dth, ddpsi_dthth, ddpsi_dC1th
    double a = std::exp(-2.0 * p.alpha_T * (th - p.theta0));
    double b = std::exp(-6.0 * p.alpha_T * (th - p.theta0));
    double pw = std::pow(b * in.C1, -0.5 * p.delta);
    out[0] = 0.5 * p.mu * (a * (in.C1 + 2.0) - 3.0) + p.mu / p.delta * (pw - 1.0);
    out[1] = 0.5 * p.mu * a - 0.5 * p.mu * pw / in.C1;
    out[2] = 0.5 * p.mu * (0.5 * p.delta + 1.0) * pw / (in.C1 * in.C1);
    out[3] = -p.mu * p.alpha_T * a * (in.C1 + 2.0) + 3.0 * p.mu * p.alpha_T * pw;
    out[4] = 2.0 * p.mu * p.alpha_T * p.alpha_T * a * (in.C1 + 2.0) +
             9.0 * p.delta * p.mu * p.alpha_T * p.alpha_T * pw;
    out[5] = -p.mu * p.alpha_T * a - 1.5 * p.delta * p.mu * p.alpha_T * pw / in.C1;
  };

  const double g = (1.0 - in.dbar) * (1.0 - in.dbar);
  const double gp = -2.0 * (1.0 - in.dbar);

  auto Gfun = [&](double th, double& G, double& dG) {
    double q[6];
    pieces(th, q);
    double sp = imp ? 1.0 / in.theta_n : 0.0;
    double s = imp ? th / in.theta_n : 1.0;
    G = g * q[3] - p.C_heat * std::log(th / p.theta0) + in.eta_n +
        sp * (in.c_e * dd + visc / tau * s * dd * dd + phi_grad);
    dG = g * q[4] - p.C_heat / th + sp * sp * visc / tau * dd * dd;
  };

  double th = in.theta_n;
  double G, dG;
  Gfun(th, G, dG);
  double scale = 1.0 + std::abs(in.eta_n) + p.C_heat;
  int it = 0;
  for (; it < 60 && std::abs(G) > 1e-12 * scale; ++it) {
    double step = -G / dG;
    double sfac = 1.0;
    while (th + sfac * step <= 0.0) sfac *= 0.5;
    th += sfac * step;
    Gfun(th, G, dG);
  }
  if (std::abs(G) > 1e-9 * scale)
    throw LocalNewtonDivergence("damage bar: local temperature solve failed");

  double q[6];
  pieces(th, q);
  const double s = imp ? th / in.theta_n : 1.0;
  const double sp = imp ? 1.0 / in.theta_n : 0.0;
  const double lt = std::log(th / p.theta0);

  QpEval e;
  e.theta_star = th;
  e.psi_e = q[0];
  e.beta_star = in.c_e + visc / tau * s * dd;
  e.value = g * q[0] + p.C_heat * ((th - p.theta0) - th * lt) +
            in.eta_n * (th - in.theta_n) + s * in.c_e * dd +
            0.5 * visc / tau * s * s * dd * dd + s * phi_grad;

  e.grad[0] = g * q[1];
  e.grad[1] = gp * q[0] + s * in.c_e + visc / tau * s * s * dd;
  e.grad[2] = s * p.mu * p.l * p.l * in.gd;

  Eigen::Matrix3d Hyy;
  Eigen::Vector3d Hyt;
  Hyy.setZero();
  Hyy(0, 0) = g * q[2];
  Hyy(0, 1) = Hyy(1, 0) = gp * q[1];
  Hyy(1, 1) = 2.0 * q[0] + visc / tau * s * s;
  Hyy(2, 2) = s * p.mu * p.l * p.l;
  Hyt[0] = g * q[5];
  Hyt[1] = gp * q[3] + sp * (in.c_e + 2.0 * visc / tau * s * dd);
  Hyt[2] = sp * p.mu * p.l * p.l * in.gd;
  double Htt = g * q[4] - p.C_heat / th + sp * sp * visc / tau * dd * dd;

  e.hess = Hyy - Hyt * Hyt.transpose() / Htt;
  return e;
}

} // namespace

DamageBar::DamageBar(double length, int n_elem, const DamageParams& p)
    : L_(length), h_(length / n_elem), n_elem_(n_elem), p_(p) {}

DamageBarState DamageBar::initial_state() const {
  DamageBarState s;
  s.u.assign(n_nodes(), 0.0);
  s.d.assign(n_nodes(), 0.0);
  s.eta.assign(n_elem_, 0.0);
  s.theta.assign(n_elem_, p_.theta0);
  return s;
}

double DamageBar::elem_threshold(int e, double theta) const {
  double c = p_.threshold(theta);
  if (e == last_opts_.imperfection_element) c *= last_opts_.imperfection_factor;
  return c;
}

void DamageBar::assemble(const Eigen::VectorXd& x, const DamageBarState& sn,
                         const DamageBarOptions& o, double& energy,
                         Eigen::VectorXd& residual, Eigen::MatrixXd* tangent) const {
  const int nn = n_nodes();
  const int ndof = 2 * nn;
  energy = 0.0;
  residual.setZero(ndof);
  if (tangent) tangent->setZero(ndof, ndof);

  for (int e = 0; e < n_elem_; ++e) {
    int a = e, b = e + 1;
    double ua = x[2 * a], ub = x[2 * b];
    double da = x[2 * a + 1], db = x[2 * b + 1];
    double F1 = 1.0 + (ub - ua) / h_;

    QpInput in;
    in.C1 = F1 * F1;
    in.dbar = 0.5 * (da + db);
    in.gd = (db - da) / h_;
    in.dbar_n = 0.5 * (sn.d[a] + sn.d[b]);
    in.gd_n = (sn.d[b] - sn.d[a]) / h_;
    in.eta_n = sn.eta[e];
    in.theta_n = sn.theta[e];
    double c = p_.threshold(sn.theta[e]);
    if (e == o.imperfection_element) c *= o.imperfection_factor;
    in.c_e = c;

    QpEval q = qp_eval(in, p_, o);
    energy += h_ * q.value;

    // chain to dofs: dC1/du = 2 F1 * (-1/h, +1/h); ddbar = (1/2, 1/2);
    // dgd = (-1/h, +1/h)
    double su[2] = {-1.0 / h_, 1.0 / h_};
    int un[2] = {2 * a, 2 * b};
    int dn[2] = {2 * a + 1, 2 * b + 1};
    double wb[2] = {0.5, 0.5};
    double wg[2] = {-1.0 / h_, 1.0 / h_};

    for (int i = 0; i < 2; ++i) {
      residual[un[i]] += h_ * q.grad[0] * 2.0 * F1 * su[i];
      residual[dn[i]] += h_ * (q.grad[1] * wb[i] + q.grad[2] * wg[i]);
    }
    if (tangent) {
      auto& K = *tangent;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          K(un[i], un[j]) += h_ * (q.hess(0, 0) * 4.0 * F1 * F1 * su[i] * su[j] +
                                   q.grad[0] * 2.0 * su[i] * su[j]);
          double ddj = q.hess(0, 1) * wb[j] + q.hess(0, 2) * wg[j];
          K(un[i], dn[j]) += h_ * 2.0 * F1 * su[i] * ddj;
          K(dn[j], un[i]) += h_ * 2.0 * F1 * su[i] * ddj;
          K(dn[i], dn[j]) +=
              h_ * (q.hess(1, 1) * wb[i] * wb[j] + q.hess(2, 2) * wg[i] * wg[j] +
                    q.hess(1, 2) * (wb[i] * wg[j] + wg[i] * wb[j]));
        }
    }
  }
}

DamageBarState DamageBar::step(const DamageBarState& sn, double u_end,
                               const DamageBarOptions& o, DamageBarReport* rep) const {
  const_cast<DamageBar*>(this)->last_opts_ = o;
  const int nn = n_nodes();
  const int ndof = 2 * nn;

  Eigen::VectorXd x(ndof);
  for (int a = 0; a < nn; ++a) {
    x[2 * a] = sn.u[a];
    x[2 * a + 1] = sn.d[a];
  }
  x[0] = 0.0;
  x[2 * (nn - 1)] = u_end;

  std::vector<bool> evolving(nn, false);
  std::vector<bool> dirichlet(ndof, false);
  dirichlet[0] = dirichlet[2 * (nn - 1)] = true;

  auto solve_constrained = [&](DamageBarReport* r) {
    std::vector<int> free;
    for (int a = 0; a < nn; ++a) {
      if (!dirichlet[2 * a]) free.push_back(2 * a);
      if (evolving[a]) free.push_back(2 * a + 1);
    }
    const int nf = (int)free.size();
    double energy;
    Eigen::VectorXd R(ndof);
    Eigen::MatrixXd K(ndof, ndof);
    assemble(x, sn, o, energy, R, &K);
    auto reduce = [&](const Eigen::VectorXd& Rf, const Eigen::MatrixXd& Kf,
                      Eigen::VectorXd& rv, Eigen::MatrixXd& kv) {
      rv.resize(nf);
      kv.resize(nf, nf);
      for (int i = 0; i < nf; ++i) {
        rv[i] = Rf[free[i]];
        for (int j = 0; j < nf; ++j) kv(i, j) = Kf(free[i], free[j]);
      }
    };
    Eigen::VectorXd rv;
    Eigen::MatrixXd kv;
    reduce(R, K, rv, kv);
    double rn0 = rv.norm(), rn = rn0;
    int it = 0;
    for (; it < o.max_iter && rn > o.newton_tol * (1.0 + rn0); ++it) {
      Eigen::VectorXd dxf = sym_indefinite_solve(kv, -rv);
      double sfac = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 40; ++ls) {
        Eigen::VectorXd xt = x;
        for (int i = 0; i < nf; ++i) xt[free[i]] += sfac * dxf[i];
        try {
          Eigen::VectorXd Rt(ndof);
          double et;
          assemble(xt, sn, o, et, Rt, nullptr);
          Eigen::VectorXd rt(nf);
          for (int i = 0; i < nf; ++i) rt[i] = Rt[free[i]];
          if (rt.norm() < rn || rt.norm() < o.newton_tol * (1.0 + rn0)) {
            x = xt;
            ok = true;
            break;
          }
        } catch (const SolverError&) {
          // inadmissible trial (inverted element / theta solve failure)
        }
        sfac *= 0.5;
      }
      if (!ok) {
        if (rn <= 1e-8 * (1.0 + rn0)) break;
        throw NewtonDivergence("damage bar: line search failed");
      }
      assemble(x, sn, o, energy, R, &K);
      reduce(R, K, rv, kv);
      rn = rv.norm();
    }
    if (rn > 1e-8 * (1.0 + rn0))
      throw NewtonDivergence("damage bar: Newton did not converge");
    if (r) {
      r->newton_iterations += it;
      r->residual = rn;
    }
    return R; // full residual at the solution
  };

  // primal active set on the nodal damage bound d >= d_n
  Eigen::VectorXd R;
  int cycles = 0;
  const double rel_tol = 1e-11 * std::max(1.0, p_.c0 * h_);
  for (;; ++cycles) {
    if (cycles > o.max_active_set_cycles)
      throw ActiveSetCycling("damage bar: active set did not settle");
    DamageBarReport local;
    R = solve_constrained(rep ? rep : &local);
    bool changed = false;
    for (int a = 0; a < nn; ++a) {
      if (!evolving[a]) {
        // release when the constrained point pushes upward (f > 0 weakly)
        if (R[2 * a + 1] < -rel_tol) {
          evolving[a] = true;
          changed = true;
        }
      } else if (x[2 * a + 1] < sn.d[a] - 1e-14) {
        evolving[a] = false;
        x[2 * a + 1] = sn.d[a];
        changed = true;
      }
    }
    if (!changed) break;
  }

  DamageBarState s = sn;
  for (int a = 0; a < nn; ++a) {
    s.u[a] = x[2 * a];
    s.d[a] = std::max(x[2 * a + 1], sn.d[a]);
  }

  // thermal update per element: predictor temperature and entropy corrector
  double min_diss = 0.0, compl_sum = 0.0;
  for (int e = 0; e < n_elem_; ++e) {
    int a = e, b = e + 1;
    double F1 = 1.0 + (s.u[b] - s.u[a]) / h_;
    QpInput in;
    in.C1 = F1 * F1;
    in.dbar = 0.5 * (s.d[a] + s.d[b]);
    in.gd = (s.d[b] - s.d[a]) / h_;
    in.dbar_n = 0.5 * (sn.d[a] + sn.d[b]);
    in.gd_n = (sn.d[b] - sn.d[a]) / h_;
    in.eta_n = sn.eta[e];
    in.theta_n = sn.theta[e];
    in.c_e = elem_threshold(e, sn.theta[e]);
    QpEval q = qp_eval(in, p_, o);
    double dd = in.dbar - in.dbar_n;
    double phi_grad = 0.5 * p_.mu * p_.l * p_.l * (in.gd * in.gd - in.gd_n * in.gd_n);
    s.theta[e] = q.theta_star;
    s.eta[e] = sn.eta[e] + (q.beta_star * dd + phi_grad) / sn.theta[e];
    double beta_e = -2.0 * (1.0 - in.dbar) * q.psi_e;
    min_diss = std::min(min_diss, -beta_e * dd * h_);
  }
  if (o.conduction && o.algorithm == DamageAlgo::SemiExplicit) {
    // explicit conduction pass on element centers, homogeneous Neumann ends
    std::vector<double> kappa(n_elem_);
    for (int e = 0; e < n_elem_; ++e) {
      double F1n = 1.0 + (sn.u[e + 1] - sn.u[e]) / h_;
      double dn = 0.5 * (sn.d[e] + sn.d[e + 1]);
      kappa[e] = (1.0 - dn) * (1.0 - dn) * p_.k_b / (F1n * F1n);
    }
    for (int e = 0; e < n_elem_; ++e) {
      double ql = (e > 0)
                      ? 0.5 * (kappa[e - 1] + kappa[e]) * (sn.theta[e] - sn.theta[e - 1]) / h_
                      : 0.0;
      double qr = (e + 1 < n_elem_)
                      ? 0.5 * (kappa[e] + kappa[e + 1]) * (sn.theta[e + 1] - sn.theta[e]) / h_
                      : 0.0;
      s.eta[e] += o.tau / sn.theta[e] * (qr - ql) / h_;
    }
  }

  if (rep) {
    rep->active_set_cycles = cycles;
    rep->min_dissipation_increment = min_diss;
    for (int a = 0; a < nn; ++a)
      compl_sum += std::abs((s.d[a] - sn.d[a]) * R[2 * a + 1]);
    rep->complementarity = compl_sum;
    double energy;
    Eigen::VectorXd Rf(ndof);
    Eigen::MatrixXd K(ndof, ndof);
    assemble(x, sn, o, energy, Rf, &K);
    rep->tangent_asymmetry = (K - K.transpose()).norm() / std::max(1.0, K.norm());
  }
  return s;
}

std::vector<double> DamageBar::beta_e_field(const DamageBarState& s) const {
  std::vector<double> out(n_elem_);
  for (int e = 0; e < n_elem_; ++e) {
    double F1 = 1.0 + (s.u[e + 1] - s.u[e]) / h_;
    SymTensor3 C = SymTensor3::diag(F1 * F1, 1.0, 1.0);
    double dbar = 0.5 * (s.d[e] + s.d[e + 1]);
    out[e] = damage_free_energy(C, dbar, s.theta[e], p_).beta_e;
  }
  return out;
}

double DamageBar::reaction(const DamageBarState& s, const DamageBarState& sn,
                           const DamageBarOptions& o) const {
  const int nn = n_nodes();
  Eigen::VectorXd x(2 * nn);
  for (int a = 0; a < nn; ++a) {
    x[2 * a] = s.u[a];
    x[2 * a + 1] = s.d[a];
  }
  double energy;
  Eigen::VectorXd R(2 * nn);
  assemble(x, sn, o, energy, R, nullptr);
  return R[2 * (nn - 1)];
}

} // namespace ivt
