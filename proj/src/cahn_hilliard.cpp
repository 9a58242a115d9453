#include "ivt/cahn_hilliard.hpp"

#include <cmath>

#include "ivt/linsolve.hpp"

namespace ivt {

double CHParams::mobility(double theta) const {
  return M0 * std::exp(-Q * (1.0 / theta - 1.0 / theta0));
}

CHGridState CHGridState::uniform(int N, double L, double c0, CHBoundary bc, double theta0) {
  CHGridState g;
  g.N = N;
  g.L = L;
  g.dx = L / N;
  g.bc = bc;
  g.c.assign(N, c0);
  g.flux.assign(N + 1, 0.0);
  g.eta.assign(N, 0.0);
  g.theta.assign(N, theta0);
  return g;
}

double CHGridState::total_species() const {
  double s = 0;
  for (double ci : c) s += ci;
  return s * dx;
}

CHLocalEnergy local_energy(double c, const CHParams& p) {
  if (!(c > 0.0 && c < 1.0))
    throw ConcentrationOutOfRange("local_energy: c outside (0,1)");
  CHLocalEnergy e;
  e.psi = p.A * (c * std::log(c) + (1.0 - c) * std::log(1.0 - c)) + p.B * c * (1.0 - c);
  e.dpsi = p.A * std::log(c / (1.0 - c)) + p.B * (1.0 - 2.0 * c);
  e.ddpsi = p.A / (c * (1.0 - c)) - 2.0 * p.B;
  return e;
}

namespace {

// gradient faces carrying the D/2 |grad c|^2 energy; (left cell, right cell)
struct FaceTopo {
  std::vector<std::pair<int, int>> grad_faces;
  std::vector<int> flux_unknowns; // face indices that are solved for
};

FaceTopo topo(const CHGridState& g) {
  FaceTopo t;
  if (g.bc == CHBoundary::Periodic) {
    for (int j = 0; j < g.N; ++j) t.grad_faces.emplace_back((j + g.N - 1) % g.N, j);
    for (int j = 0; j < g.N; ++j) t.flux_unknowns.push_back(j);
  } else {
    for (int j = 1; j < g.N; ++j) t.grad_faces.emplace_back(j - 1, j);
    if (g.bc == CHBoundary::NoFlux) {
      for (int j = 1; j < g.N; ++j) t.flux_unknowns.push_back(j);
    } else {
      for (int j = 0; j <= g.N; ++j) t.flux_unknowns.push_back(j);
    }
  }
  return t;
}

// div H on cell i; face N aliases face 0 for periodic grids
double div_flux(const CHGridState& g, const std::vector<double>& H, int i) {
  double hr = (g.bc == CHBoundary::Periodic && i == g.N - 1) ? H[0] : H[i + 1];
  return (hr - H[i]) / g.dx;
}

} // namespace

double ch_energy(const CHGridState& g, const CHParams& p) {
  FaceTopo t = topo(g);
  double E = 0;
  for (int i = 0; i < g.N; ++i) E += local_energy(g.c[i], p).psi * g.dx;
  for (auto [l, r] : t.grad_faces) {
    double gc = (g.c[r] - g.c[l]) / g.dx;
    E += 0.5 * p.D * gc * gc * g.dx;
  }
  return E;
}

std::vector<double> chemical_potential(const CHGridState& g, const CHParams& p) {
  FaceTopo t = topo(g);
  std::vector<double> mu(g.N);
  for (int i = 0; i < g.N; ++i) mu[i] = local_energy(g.c[i], p).dpsi;
  for (auto [l, r] : t.grad_faces) {
    double gc = (g.c[r] - g.c[l]) / g.dx;
    mu[r] += p.D * gc / g.dx;
    mu[l] -= p.D * gc / g.dx;
  }
  return mu;
}

namespace {

struct CHWork {
  const CHGridState& gn;
  const CHParams& p;
  const CHStepOptions& o;
  FaceTopo t;
  int N, nf;
  std::vector<double> m_face;      // mobility coefficient on faces
  std::vector<double> theta_face_n; // face-averaged old temperature

  CHWork(const CHGridState& g, const CHParams& pp, const CHStepOptions& oo)
      : gn(g), p(pp), o(oo), t(topo(g)), N(g.N), nf((int)t.flux_unknowns.size()) {
    m_face.assign(g.N + 1, 0.0);
    theta_face_n.assign(g.N + 1, p.theta0);
    for (int j = 0; j <= g.N; ++j) {
      int cl = (j == 0) ? (g.bc == CHBoundary::Periodic ? g.N - 1 : 0) : j - 1;
      int cr = (j == g.N) ? (g.bc == CHBoundary::Periodic ? 0 : g.N - 1) : j;
      double cf = 0.5 * (g.c[cl] + g.c[cr]);
      double tf = 0.5 * (g.theta[cl] + g.theta[cr]);
      theta_face_n[j] = tf;
      m_face[j] = p.mobility(tf) * cf * (1.0 - cf);
    }
  }

  std::vector<double> full_flux(const Eigen::VectorXd& h) const {
    std::vector<double> H(N + 1, 0.0);
    for (int a = 0; a < nf; ++a) H[t.flux_unknowns[a]] = h[a];
    if (gn.bc == CHBoundary::Periodic) H[N] = H[0];
    return H;
  }

  std::vector<double> concentration(const std::vector<double>& H) const {
    std::vector<double> c(N);
    for (int i = 0; i < N; ++i) c[i] = gn.c[i] - o.tau * div_flux(gn, H, i);
    return c;
  }
};

// chemical potential for an arbitrary concentration field on gn's grid
std::vector<double> mu_of(const CHWork& w, const std::vector<double>& c) {
  CHGridState tmp = w.gn;
  tmp.c = c;
  return chemical_potential(tmp, w.p);
}

// isothermal / predictor flux solve: minimize the incremental potential
// over the face fluxes at frozen mobility and unit thermal scaling
Eigen::VectorXd solve_flux(const CHWork& w, CHStepReport* rep) {
  
  const int nf = w.nf;
  const double tau = w.o.tau, dx = w.gn.dx;
  Eigen::VectorXd h(nf);
  for (int a = 0; a < nf; ++a) h[a] = w.gn.flux[w.t.flux_unknowns[a]];

  auto potential = [&](const Eigen::VectorXd& z) {
    auto H = w.full_flux(z);
    auto c = w.concentration(H);
    CHGridState tmp = w.gn;
    tmp.c = c;
    double E = ch_energy(tmp, w.p);
    for (int a = 0; a < nf; ++a) {
      int j = w.t.flux_unknowns[a];
      E += tau * 0.5 * z[a] * z[a] / w.m_face[j] * dx;
    }
    if (w.gn.bc == CHBoundary::PrescribedMu)
      E += tau * (-w.gn.mu_bar_left * H[0] + w.gn.mu_bar_right * H[w.N]);
    return E;
  };

  auto gradient = [&](const Eigen::VectorXd& z, Eigen::VectorXd& G, Eigen::MatrixXd* J) {
    auto H = w.full_flux(z);
    auto c = w.concentration(H);
    auto mu = mu_of(w, c);
    G.resize(nf);
    for (int a = 0; a < nf; ++a) {
      int j = w.t.flux_unknowns[a];
      double gmu;
      if (j == 0)
        gmu = (w.gn.bc == CHBoundary::Periodic) ? (mu[0] - mu[w.N - 1]) / dx
                                                : (mu[0] - w.gn.mu_bar_left) / dx;
      else if (j == w.N)
        gmu = (w.gn.mu_bar_right - mu[w.N - 1]) / dx;
      else
        gmu = (mu[j] - mu[j - 1]) / dx;
      G[a] = tau * dx * (gmu + z[a] / w.m_face[j]);
    }
    if (J) {
      // dmu_i/dc_l assembled through the energy Hessian, then chained
      // with dc/dH
      Eigen::MatrixXd dmudc = Eigen::MatrixXd::Zero(w.N, w.N);
      for (int i = 0; i < w.N; ++i) dmudc(i, i) = local_energy(c[i], w.p).ddpsi;
      for (auto [l, r] : w.t.grad_faces) {
        double s = w.p.D / (dx * dx);
        dmudc(r, r) += s;
        dmudc(l, l) += s;
        dmudc(r, l) -= s;
        dmudc(l, r) -= s;
      }
      Eigen::MatrixXd dcdh = Eigen::MatrixXd::Zero(w.N, nf);
      for (int a = 0; a < nf; ++a) {
        int j = w.t.flux_unknowns[a];
        // c_i = c_n,i - tau (H_{i+1} - H_i)/dx: face j raises cell j-1,
        // lowers cell j
        int il = j - 1, ir = j;
        if (w.gn.bc == CHBoundary::Periodic && j == 0) il = w.N - 1;
        if (il >= 0 && il < w.N) dcdh(il, a) -= tau / dx;
        if (ir >= 0 && ir < w.N) dcdh(ir, a) += tau / dx;
      }
      Eigen::MatrixXd dmudh = dmudc * dcdh;
      J->resize(nf, nf);
      for (int a = 0; a < nf; ++a) {
        int j = w.t.flux_unknowns[a];
        for (int b = 0; b < nf; ++b) {
          double g;
          if (j == 0)
            g = (w.gn.bc == CHBoundary::Periodic) ? (dmudh(0, b) - dmudh(w.N - 1, b)) / dx
                                                  : dmudh(0, b) / dx;
          else if (j == w.N)
            g = -dmudh(w.N - 1, b) / dx;
          else
            g = (dmudh(j, b) - dmudh(j - 1, b)) / dx;
          (*J)(a, b) = tau * dx * g;
        }
        (*J)(a, a) += tau * dx / w.m_face[j];
      }
    }
  };

  Eigen::VectorXd G(nf);
  Eigen::MatrixXd J(nf, nf);
  double E = potential(h);
  gradient(h, G, &J);
  double g0 = G.norm();
  int it = 0;
  for (; it < w.o.max_iter && G.norm() > w.o.newton_tol * (1.0 + g0); ++it) {
    Eigen::VectorXd dh = sym_indefinite_solve(J, -G);
    double s = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      Eigen::VectorXd ht = h + s * dh;
      try {
        double Et = potential(ht);
        if (Et < E || s < 1e-12) {
          h = ht;
          E = Et;
          ok = true;
          break;
        }
      } catch (const ConcentrationOutOfRange&) {
        // trial step left (0,1); shrink
      }
      s *= 0.5;
    }
    if (!ok) {
      if (G.norm() <= 1e-8 * (1.0 + g0)) break;
      throw NewtonDivergence("step_ch: flux line search failed");
    }
    gradient(h, G, &J);
  }
  if (G.norm() > 1e-8 * (1.0 + g0))
    throw NewtonDivergence("step_ch: flux solve did not converge");
  if (rep) {
    rep->iterations = it;
    rep->residual = G.norm();
  }
  return h;
}

} // namespace

CHGridState step_ch(const CHGridState& gn, const CHParams& p, const CHStepOptions& o,
                    CHStepReport* report) {
  CHWork w(gn, p, o);
  if (p.M0 == 0.0) {
    // diffusion disabled: no flux unknowns, thermal subsystem only
    w.t.flux_unknowns.clear();
    w.nf = 0;
  }

  if (!o.thermal_coupling || o.algorithm == CHAlgo::SemiExplicit) {
    CHGridState g = gn;
    if (p.M0 > 0.0) {
      Eigen::VectorXd h = solve_flux(w, report);
      auto H = w.full_flux(h);
      auto c = w.concentration(H);
      for (double ci : c)
        if (!(ci > 0.0 && ci < 1.0))
          throw ConcentrationOutOfRange("step_ch: concentration left (0,1)");
      g.c = c;
      g.flux = H;
    }
    if (o.thermal_coupling) {
      // isentropic predictor temperature, then entropy corrector with the
      // unscaled dissipation and explicit conduction (homogeneous Neumann)
      std::vector<double> diss(gn.N, 0.0);
      int jmax = (gn.bc == CHBoundary::Periodic) ? gn.N - 1 : gn.N;
      for (int j = 0; j <= jmax; ++j) {
        if (w.m_face[j] <= 0.0 || g.flux[j] == 0.0) continue;
        double dj = g.flux[j] * g.flux[j] / w.m_face[j];
        int cl = (j == 0) ? (gn.bc == CHBoundary::Periodic ? gn.N - 1 : 0) : j - 1;
        int cr = (j == gn.N) ? gn.N - 1 : j;
        if (cl == cr) {
          diss[cl] += dj;
        } else {
          diss[cl] += 0.5 * dj;
          diss[cr] += 0.5 * dj;
        }
      }
      CHGridState gnext = g;
      for (int i = 0; i < gn.N; ++i) {
        // predictor temperature from the frozen entropy
        gnext.theta[i] = p.theta0 * std::exp(gn.eta[i] / p.C);
        double cond;
        if (gn.bc == CHBoundary::Periodic) {
          int il = (i + gn.N - 1) % gn.N, ir = (i + 1) % gn.N;
          cond = p.k * (gn.theta[ir] - 2.0 * gn.theta[i] + gn.theta[il]) / (gn.dx * gn.dx);
        } else {
          double tl = (i > 0) ? gn.theta[i - 1] : gn.theta[i];
          double tr = (i + 1 < gn.N) ? gn.theta[i + 1] : gn.theta[i];
          cond = p.k * (tr - 2.0 * gn.theta[i] + tl) / (gn.dx * gn.dx);
        }
        gnext.eta[i] = gn.eta[i] + o.tau / gn.theta[i] * (diss[i] + cond + o.heat_source);
      }
      if (report) report->dissipation_increment = diss;
      return gnext;
    }
    return g;
  }

  // fully coupled implicit update: unknowns [flux; eta; theta; T]
  const int N = gn.N, nf = w.nf;
  const double tau = o.tau, dx = gn.dx;
  std::vector<int> T_unknown(N, -1);
  int nT = 0;
  for (int i = 0; i < N; ++i) {
    bool dir = o.dirichlet_T && gn.bc != CHBoundary::Periodic && (i == 0 || i == N - 1);
    if (!dir) T_unknown[i] = nT++;
  }
  const int n_all = nf + 2 * N + nT;
  auto iH = [&](int a) { return a; };
  auto iEta = [&](int i) { return nf + i; };
  auto iTheta = [&](int i) { return nf + N + i; };
  auto iT = [&](int i) { return nf + 2 * N + T_unknown[i]; };

  Eigen::VectorXd x(n_all);
  for (int a = 0; a < nf; ++a) x[iH(a)] = gn.flux[w.t.flux_unknowns[a]];
  for (int i = 0; i < N; ++i) {
    x[iEta(i)] = gn.eta[i];
    x[iTheta(i)] = gn.theta[i];
    if (T_unknown[i] >= 0) x[iT(i)] = gn.theta[i];
  }

  auto Tval = [&](const Eigen::VectorXd& z, int i) {
    if (T_unknown[i] >= 0) return z[iT(i)];
    return (i == 0) ? o.T_left : o.T_right;
  };

  // conduction faces: interior (plus wrap for periodic)
  std::vector<std::pair<int, int>> cond_faces;
  for (int j = 1; j < N; ++j) cond_faces.emplace_back(j - 1, j);
  if (gn.bc == CHBoundary::Periodic) cond_faces.emplace_back(N - 1, 0);

  auto eval = [&](const Eigen::VectorXd& z, Eigen::VectorXd& R, Eigen::MatrixXd* J) {
    auto H = w.full_flux(z.head(nf));
    auto c = w.concentration(H);
    auto mu = mu_of(w, c);
    R.setZero(n_all);
    if (J) J->setZero(n_all, n_all);

    // flux equations with the (T/theta_n)^2 scaled resistivity
    for (int a = 0; a < nf; ++a) {
      int j = w.t.flux_unknowns[a];
      int cl = (j == 0) ? N - 1 : j - 1;
      int cr = (j == N) ? N - 1 : j; // only used when face has two cells
      double Tf, gmu;
      if (gn.bc == CHBoundary::Periodic) {
        cl = (j + N - 1) % N;
        cr = j % N;
        Tf = 0.5 * (Tval(z, cl) + Tval(z, cr));
        gmu = (mu[cr] - mu[cl]) / dx;
      } else if (j == 0) {
        Tf = Tval(z, 0);
        cl = cr = 0;
        gmu = (mu[0] - gn.mu_bar_left) / dx;
      } else if (j == N) {
        Tf = Tval(z, N - 1);
        cl = cr = N - 1;
        gmu = (gn.mu_bar_right - mu[N - 1]) / dx;
      } else {
        cl = j - 1;
        cr = j;
        Tf = 0.5 * (Tval(z, cl) + Tval(z, cr));
        gmu = (mu[cr] - mu[cl]) / dx;
      }
      double sc = Tf / w.theta_face_n[j];
      R[iH(a)] = tau * dx * (gmu + sc * sc * H[j] / w.m_face[j]);
      if (J) {
        (*J)(iH(a), iH(a)) += tau * dx * sc * sc / w.m_face[j];
        double dsc = 2.0 * sc * H[j] / (w.m_face[j] * w.theta_face_n[j]);
        double wgt = (gn.bc != CHBoundary::Periodic && (j == 0 || j == N)) ? 1.0 : 0.5;
        if (T_unknown[cl] >= 0) (*J)(iH(a), iT(cl)) += tau * dx * dsc * wgt;
        if (cr != cl && T_unknown[cr] >= 0) (*J)(iH(a), iT(cr)) += tau * dx * dsc * wgt;
      }
    }
    if (J) {
      // d(grad mu)/dH block
      Eigen::MatrixXd dmudc = Eigen::MatrixXd::Zero(N, N);
      for (int i = 0; i < N; ++i) dmudc(i, i) = local_energy(c[i], p).ddpsi;
      for (auto [l, r] : w.t.grad_faces) {
        double s = p.D / (dx * dx);
        dmudc(r, r) += s;
        dmudc(l, l) += s;
        dmudc(r, l) -= s;
        dmudc(l, r) -= s;
      }
      Eigen::MatrixXd dcdh = Eigen::MatrixXd::Zero(N, nf);
      for (int a = 0; a < nf; ++a) {
        int j = w.t.flux_unknowns[a];
        int il = j - 1, ir = j;
        if (gn.bc == CHBoundary::Periodic && j == 0) il = N - 1;
        if (il >= 0 && il < N) dcdh(il, a) -= tau / dx;
        if (ir >= 0 && ir < N) dcdh(ir, a) += tau / dx;
      }
      Eigen::MatrixXd dmudh = dmudc * dcdh;
      for (int a = 0; a < nf; ++a) {
        int j = w.t.flux_unknowns[a];
        for (int b = 0; b < nf; ++b) {
          double g;
          if (gn.bc == CHBoundary::Periodic) {
            int cl = (j + N - 1) % N, cr = j % N;
            g = (dmudh(cr, b) - dmudh(cl, b)) / dx;
          } else if (j == 0)
            g = dmudh(0, b) / dx;
          else if (j == N)
            g = -dmudh(N - 1, b) / dx;
          else
            g = (dmudh(j, b) - dmudh(j - 1, b)) / dx;
          (*J)(iH(a), iH(b)) += tau * dx * g;
        }
      }
    }

    // eta equations: theta - T
    for (int i = 0; i < N; ++i) {
      R[iEta(i)] = dx * (z[iTheta(i)] - Tval(z, i));
      if (J) {
        (*J)(iEta(i), iTheta(i)) += dx;
        if (T_unknown[i] >= 0) (*J)(iEta(i), iT(i)) -= dx;
      }
    }
    // theta equations: -C ln(theta/theta0) + eta
    for (int i = 0; i < N; ++i) {
      double th = z[iTheta(i)];
      R[iTheta(i)] = dx * (-p.C * std::log(th / p.theta0) + z[iEta(i)]);
      if (J) {
        (*J)(iTheta(i), iTheta(i)) += dx * (-p.C / th);
        (*J)(iTheta(i), iEta(i)) += dx;
      }
    }
    // T equations: entropy update with scaled dissipation, conduction, source
    for (int i = 0; i < N; ++i) {
      if (T_unknown[i] < 0) continue;
      R[iT(i)] = -dx * (z[iEta(i)] - gn.eta[i]) + dx * tau * o.heat_source / gn.theta[i];
      if (J) (*J)(iT(i), iEta(i)) -= dx;
    }
    // dissipation contribution d/dT of tau * (Tf/thn)^2 H^2/(2m) dx
    for (int a = 0; a < nf; ++a) {
      int j = w.t.flux_unknowns[a];
      int cl, cr;
      double wgt;
      if (gn.bc == CHBoundary::Periodic) {
        cl = (j + N - 1) % N;
        cr = j % N;
        wgt = 0.5;
      } else if (j == 0 || j == N) {
        cl = cr = (j == 0) ? 0 : N - 1;
        wgt = 1.0;
      } else {
        cl = j - 1;
        cr = j;
        wgt = 0.5;
      }
      double Tf = (cl == cr) ? Tval(z, cl) : 0.5 * (Tval(z, cl) + Tval(z, cr));
      double com = tau * dx * Tf * H[j] * H[j] / (w.m_face[j] * w.theta_face_n[j] * w.theta_face_n[j]);
      for (int ci : {cl, cr}) {
        if (T_unknown[ci] < 0) continue;
        R[iT(ci)] += com * wgt;
        if (J) {
          (*J)(iT(ci), iH(a)) += 2.0 * tau * dx * Tf * H[j] * wgt /
                                 (w.m_face[j] * w.theta_face_n[j] * w.theta_face_n[j]);
          double dT = tau * dx * H[j] * H[j] / (w.m_face[j] * w.theta_face_n[j] * w.theta_face_n[j]);
          if (T_unknown[cl] >= 0) (*J)(iT(ci), iT(cl)) += dT * wgt * (cl == cr ? 1.0 : 0.5);
          if (cr != cl && T_unknown[cr] >= 0) (*J)(iT(ci), iT(cr)) += dT * wgt * 0.5;
        }
        if (cl == cr) break;
      }
    }
    // conduction: -tau * k thn_f (grad T)^2/(2 Tf^2) dx per face
    for (auto [l, r] : cond_faces) {
      double Tl = Tval(z, l), Tr = Tval(z, r);
      double gT = (Tr - Tl) / dx;
      double Tf = 0.5 * (Tl + Tr);
      double thnf = 0.5 * (gn.theta[l] + gn.theta[r]);
      double kf = p.k * thnf;
      // d/dT_l and d/dT_r of -tau*kf*gT^2/(2 Tf^2)*dx
      auto add = [&](int ci, double dgT, double dTf) {
        if (T_unknown[ci] < 0) return;
        R[iT(ci)] += -tau * dx * kf * (gT * dgT / (Tf * Tf) - gT * gT * dTf / (Tf * Tf * Tf));
        if (J) {
          for (auto [cj, dgT2, dTf2] :
               {std::tuple{l, -1.0 / dx, 0.5}, std::tuple{r, 1.0 / dx, 0.5}}) {
            if (T_unknown[cj] < 0) continue;
            double d2 = -tau * dx * kf *
                        (dgT * dgT2 / (Tf * Tf) - 2.0 * gT * dgT * dTf2 / (Tf * Tf * Tf) -
                         2.0 * gT * dgT2 * dTf / (Tf * Tf * Tf) +
                         3.0 * gT * gT * dTf * dTf2 / (Tf * Tf * Tf * Tf));
            (*J)(iT(ci), iT(cj)) += d2;
          }
        }
      };
      add(l, -1.0 / dx, 0.5);
      add(r, 1.0 / dx, 0.5);
    }
  };

  Eigen::VectorXd R(n_all);
  Eigen::MatrixXd J(n_all, n_all);
  eval(x, R, &J);
  double rn0 = R.norm(), rn = rn0;
  int it = 0;
  for (; it < o.max_iter && rn > o.newton_tol * (1.0 + rn0); ++it) {
    Eigen::VectorXd dxv = sym_indefinite_solve(J, -R);
    double s = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      Eigen::VectorXd xt = x + s * dxv;
      bool pos = true;
      for (int i = 0; i < N; ++i)
        if (xt[iTheta(i)] <= 0.0 || (T_unknown[i] >= 0 && xt[iT(i)] <= 0.0)) pos = false;
      if (pos) {
        try {
          Eigen::VectorXd Rt(n_all);
          eval(xt, Rt, nullptr);
          if (Rt.norm() < rn || Rt.norm() < o.newton_tol * (1.0 + rn0)) {
            x = xt;
            ok = true;
            break;
          }
        } catch (const ConcentrationOutOfRange&) {
        }
      }
      s *= 0.5;
    }
    if (!ok) {
      if (rn <= 1e-8 * (1.0 + rn0)) break;
      throw NewtonDivergence("step_ch: coupled Newton line search failed");
    }
    eval(x, R, &J);
    rn = R.norm();
  }
  if (rn > 1e-8 * (1.0 + rn0))
    throw NewtonDivergence("step_ch: coupled Newton did not converge");

  CHGridState g = gn;
  auto H = w.full_flux(x.head(nf));
  auto c = w.concentration(H);
  for (double ci : c)
    if (!(ci > 0.0 && ci < 1.0))
      throw ConcentrationOutOfRange("step_ch: concentration left (0,1)");
  g.c = c;
  g.flux = H;
  for (int i = 0; i < N; ++i) {
    g.eta[i] = x[iEta(i)];
    g.theta[i] = x[iTheta(i)];
  }
  if (report) {
    report->iterations = it;
    report->residual = rn;
    report->dissipation_increment.assign(N, 0.0);
  }
  return g;
}

} // namespace ivt
