#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "ivt/point0d.hpp"

using namespace ivt;

namespace {

std::mt19937_64 rng(77);

// runs a strain-driven ramp eps(t) = rate*t over [0, t_end]
std::vector<DeviceState0D> run_ramp(const DeviceParams& p, Algo0D algo, double tau,
                                    double t_end, double rate,
                                    std::vector<double>* diss = nullptr) {
  StepControl c;
  c.tau = tau;
  c.algorithm = algo;
  c.drive = DriveMode::Strain;
  DeviceStepper stepper(p, c);
  DeviceState0D s;
  s.theta = p.theta0;
  std::vector<DeviceState0D> out{s};
  int n = static_cast<int>(std::round(t_end / tau));
  for (int i = 1; i <= n; ++i) {
    StepReport rep;
    s = stepper.step(s, rate * i * tau, &rep);
    out.push_back(s);
    if (diss) diss->push_back(rep.dissipation_increment);
  }
  return out;
}

double state_dist(const DeviceState0D& a, const DeviceState0D& b) {
  return std::abs(a.eps - b.eps) + std::abs(a.q - b.q) + std::abs(a.eta - b.eta) +
         std::abs(a.theta - b.theta);
}

} // namespace

TEST_CASE("free energy closed forms") {
  DeviceParams p;
  FreeEnergyEval e = free_energy(0, 0, p.theta0, p);
  CHECK(e.psi == doctest::Approx(0.0));
  CHECK(-e.grad[2] == doctest::Approx(0.0)); // eta = -d_theta psi = 0

  // relaxed dashpot, no thermal offset: psi = 0 for any eps
  e = free_energy(0.37, 0.37, p.theta0, p);
  CHECK(e.psi == doctest::Approx(0.0));

  CHECK_THROWS_AS(free_energy(0, 0, -1.0, p), NonPositiveTemperature);
}

TEST_CASE("free energy derivatives match finite differences") {
  DeviceParams p;
  std::uniform_real_distribution<double> ud(-0.05, 0.05);
  std::uniform_real_distribution<double> ut(250.0, 350.0);
  for (int trial = 0; trial < 30; ++trial) {
    double eps = ud(rng), q = ud(rng), th = ut(rng);
    FreeEnergyEval e = free_energy(eps, q, th, p);
    double h = 1e-6;
    Eigen::Vector3d x(eps, q, th), fd;
    Eigen::Matrix3d fdh;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d xp = x, xm = x;
      xp[i] += h * std::max(1.0, std::abs(x[i]));
      xm[i] -= h * std::max(1.0, std::abs(x[i]));
      FreeEnergyEval ep = free_energy(xp[0], xp[1], xp[2], p);
      FreeEnergyEval em = free_energy(xm[0], xm[1], xm[2], p);
      double dd = xp[i] - xm[i];
      fd[i] = (ep.psi - em.psi) / dd;
      fdh.col(i) = (ep.grad - em.grad) / dd;
    }
    CHECK((e.grad - fd).norm() <= 1e-7 * (1.0 + fd.norm()));
    CHECK((e.hess - fdh).norm() <= 1e-6 * (1.0 + fdh.norm()));
  }
  // concavity in theta
  FreeEnergyEval e = free_energy(0.01, 0.0, 300.0, p);
  CHECK(e.hess(2, 2) < 0.0);
}

TEST_CASE("dissipation potential closed forms and homogeneity") {
  DeviceParams p;
  p.H1 = 2.0;
  p.H2 = 0.0;
  DissipationEval d = dissipation_potential(0, 0, p);
  CHECK(d.phi == doctest::Approx(0.0));
  d = dissipation_potential(1, 0, p);
  CHECK(d.phi == doctest::Approx(1.0));
  CHECK(2.0 * d.phi == doctest::Approx(2.0)); // D = 2 phi

  p.H2 = 7.0;
  for (double g : {0.5, 2.0, 10.0}) {
    DissipationEval a = dissipation_potential(0.3, -0.8, p);
    DissipationEval b = dissipation_potential(g * 0.3, g * -0.8, p);
    CHECK(b.phi == doctest::Approx(g * g * a.phi));
  }
}

TEST_CASE("rest state is a fixed point of both algorithms") {
  DeviceParams p;
  for (Algo0D algo : {Algo0D::Implicit, Algo0D::SemiExplicit}) {
    StepControl c;
    c.algorithm = algo;
    c.drive = DriveMode::Stress;
    c.tau = 0.05;
    DeviceStepper st(p, c);
    DeviceState0D s;
    s.theta = p.theta0;
    DeviceState0D s1 = st.step(s, 0.0);
    CHECK(state_dist(s, s1) < 1e-12);
  }
}

TEST_CASE("pure dissipative heating: theta strictly increases for alpha_T = 0") {
  DeviceParams p;
  p.alpha_T = 0.0;
  p.H2 = 5.0;
  auto traj = run_ramp(p, Algo0D::Implicit, 0.01, 0.5, 0.2);
  for (size_t i = 1; i < traj.size(); ++i) CHECK(traj[i].theta > traj[i - 1].theta);

  // and against a fine-step reference trajectory
  auto ref = run_ramp(p, Algo0D::Implicit, 0.01 / 1000, 0.5, 0.2);
  CHECK(state_dist(traj.back(), ref.back()) < 5e-3);
}

TEST_CASE("Gough-Joule isentropic closed form") {
  DeviceParams p;
  p.alpha_T = 1e-4;
  p.H1 = 0.0;
  p.H2 = 0.0; // internal dashpot absent, q frozen at 0
  for (Algo0D algo : {Algo0D::Implicit, Algo0D::SemiExplicit}) {
    auto traj = run_ramp(p, algo, 0.01, 1.0, 0.05);
    const DeviceState0D& s = traj.back();
    // eta stays zero, theta solves C ln(theta/theta0) = -E alpha_T eps
    CHECK(std::abs(s.eta) < 1e-12);
    double theta_exact = p.theta0 * std::exp(-p.E * p.alpha_T * s.eps / p.C);
    CHECK(std::abs(s.theta - theta_exact) <= 1e-8 * theta_exact);
    CHECK(s.theta < p.theta0); // stretching cools

    auto traj2 = run_ramp(p, algo, 0.01, 1.0, -0.05);
    CHECK(traj2.back().theta > p.theta0); // compression heats
  }
}

TEST_CASE("semi-explicit entropy update is the unscaled dissipation, exactly") {
  DeviceParams p;
  p.H1 = 1.0;
  p.H2 = 10.0;
  StepControl c;
  c.algorithm = Algo0D::SemiExplicit;
  c.tau = 0.02;
  DeviceStepper st(p, c);
  DeviceState0D s;
  s.theta = p.theta0;
  for (int i = 1; i <= 20; ++i) {
    DeviceState0D sn = s;
    StepReport rep;
    s = st.step(s, 0.3 * i * c.tau, &rep);
    DissipationEval d =
        dissipation_potential((s.eps - sn.eps) / c.tau, (s.q - sn.q) / c.tau, p);
    double expect = c.tau / sn.theta * 2.0 * d.phi;
    CHECK(std::abs((s.eta - sn.eta) - expect) <= 1e-14 * std::abs(expect));
  }
}

TEST_CASE("implicit entropy update carries the theta/theta_n scaled argument") {
  DeviceParams p;
  p.H1 = 1.0;
  p.H2 = 10.0;
  StepControl c;
  c.algorithm = Algo0D::Implicit;
  c.tau = 0.02;
  c.newton_tol = 1e-14;
  DeviceStepper st(p, c);
  DeviceState0D s;
  s.theta = p.theta0;
  for (int i = 1; i <= 20; ++i) {
    DeviceState0D sn = s;
    s = st.step(s, 0.3 * i * c.tau);
    double r = s.theta / sn.theta;
    DissipationEval d = dissipation_potential(r * (s.eps - sn.eps) / c.tau,
                                              r * (s.q - sn.q) / c.tau, p);
    double expect = c.tau / s.theta * 2.0 * d.phi; // 1/T prefactor with T = theta
    CHECK(std::abs((s.eta - sn.eta) - expect) <= 1e-11 * std::max(1e-30, std::abs(expect)));
  }
}

TEST_CASE("implicit and semi-explicit converge at first order to a shared limit") {
  DeviceParams p;
  p.H1 = 0.5;
  p.H2 = 10.0;
  p.alpha_T = 1e-4;
  double t_end = 1.0, rate = 0.1;
  auto ref = run_ramp(p, Algo0D::Implicit, 0.005 / 1000, t_end, rate);

  for (Algo0D algo : {Algo0D::Implicit, Algo0D::SemiExplicit}) {
    std::vector<double> taus = {0.005, 0.0025, 0.00125, 0.000625};
    std::vector<double> errs;
    for (double tau : taus) {
      auto traj = run_ramp(p, algo, tau, t_end, rate);
      errs.push_back(state_dist(traj.back(), ref.back()));
    }
    // observed order from successive halvings
    for (size_t i = 0; i + 1 < errs.size(); ++i) {
      double order = std::log2(errs[i] / errs[i + 1]);
      CHECK(order > 0.8);
      CHECK(order < 1.2);
    }
  }
}

TEST_CASE("temperature rate forms agree") {
  DeviceParams p;
  p.alpha_T = 2e-4;
  std::uniform_real_distribution<double> ud(-0.1, 0.1);
  std::uniform_real_distribution<double> ut(250, 350);
  for (int trial = 0; trial < 20; ++trial) {
    DeviceState0D s;
    s.eps = ud(rng);
    s.q = ud(rng);
    s.theta = ut(rng);
    double deps = ud(rng), dq = ud(rng), deta = ud(rng);
    double td = temperature_rate(s, deps, dq, deta, p);
    // model form: theta/C [deta - E alpha_T (deps - dq)]
    double td2 = s.theta / p.C * (deta - p.E * p.alpha_T * (deps - dq));
    CHECK(std::abs(td - td2) <= 1e-12 * std::max(1.0, std::abs(td2)));
    // classical form C theta-dot = D - H with D := theta*deta here
    double H = p.E * p.alpha_T * s.theta * (deps - dq);
    CHECK(std::abs(p.C * td - (s.theta * deta - H)) <=
          1e-12 * std::max(1.0, std::abs(s.theta * deta)));
  }
  // all rates zero -> 0, and alpha_T = 0 -> theta*deta/C
  DeviceState0D s;
  s.theta = 300;
  CHECK(temperature_rate(s, 0, 0, 0, p) == doctest::Approx(0.0));
  p.alpha_T = 0.0;
  CHECK(temperature_rate(s, 0.3, 0.1, 0.02, p) ==
        doctest::Approx(s.theta * 0.02 / p.C));
}

TEST_CASE("governing residuals vanish on the exact linear-ODE solution") {
  // alpha_T = 0, strain ramp eps = r t: Biot's equation is linear,
  // q(t) = r t - (r H2/E)(1 - exp(-E t/H2)), theta from C theta-dot = D
  DeviceParams p;
  p.alpha_T = 0.0;
  p.H1 = 2.0;
  p.H2 = 10.0;
  double r = 0.3;
  double a = p.E / p.H2;
  auto q_exact = [&](double t) { return r * t - (r / a) * (1.0 - std::exp(-a * t)); };
  auto dq_exact = [&](double t) { return r * (1.0 - std::exp(-a * t)); };
  auto theta_exact = [&](double t) {
    double i2 = r * r * (t - 2.0 / a * (1.0 - std::exp(-a * t)) +
                         1.0 / (2.0 * a) * (1.0 - std::exp(-2.0 * a * t)));
    return p.theta0 + (p.H1 * r * r * t + p.H2 * i2) / p.C;
  };
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    DeviceState0D s;
    s.eps = r * t;
    s.q = q_exact(t);
    s.theta = theta_exact(t);
    s.eta = p.C * std::log(s.theta / p.theta0);
    double dq = dq_exact(t);
    double diss = p.H1 * r * r + p.H2 * dq * dq;
    double deta = diss / s.theta;
    double sigma = p.E * (s.eps - s.q) + p.H1 * r;
    Eigen::Vector4d res = check_governing_residuals(s, r, dq, deta, sigma, p);
    CHECK(res.norm() <= 1e-8);
  }
  // equilibrium rest state: all residuals zero
  DeviceState0D rest;
  rest.theta = p.theta0;
  CHECK(check_governing_residuals(rest, 0, 0, 0, 0, p).norm() == doctest::Approx(0.0));
}

TEST_CASE("converged implicit steps satisfy the governing equations to O(tau)") {
  DeviceParams p;
  p.alpha_T = 0.0;
  p.H1 = 1.0;
  p.H2 = 10.0;
  double rate = 0.3, t_end = 1.0;
  std::vector<double> taus = {0.02, 0.01, 0.005};
  std::vector<double> norms;
  for (double tau : taus) {
    auto traj = run_ramp(p, Algo0D::Implicit, tau, t_end, rate);
    double worst = 0;
    for (size_t i = 1; i < traj.size(); ++i) {
      const DeviceState0D& s = traj[i];
      const DeviceState0D& sn = traj[i - 1];
      double deps = (s.eps - sn.eps) / tau;
      double dq = (s.q - sn.q) / tau;
      double deta = (s.eta - sn.eta) / tau;
      double sigma = p.E * (s.eps - s.q) + p.H1 * deps;
      Eigen::Vector4d res = check_governing_residuals(s, deps, dq, deta, sigma, p);
      // equilibrium residual is zero by the sigma definition; drop it
      res[0] = 0.0;
      worst = std::max(worst, res.norm());
    }
    norms.push_back(worst);
  }
  CHECK(norms[0] / norms[1] > 1.5);
  CHECK(norms[1] / norms[2] > 1.5);
}

TEST_CASE("dissipation nonnegative and entropy monotone for adiabatic alpha_T = 0") {
  DeviceParams p;
  p.alpha_T = 0.0;
  p.H1 = 0.7;
  p.H2 = 4.0;
  std::vector<double> diss;
  auto traj = run_ramp(p, Algo0D::Implicit, 0.01, 1.0, 0.2, &diss);
  for (double d : diss) CHECK(d >= 0.0);
  for (size_t i = 1; i < traj.size(); ++i) CHECK(traj[i].eta >= traj[i - 1].eta);
}

TEST_CASE("saddle inertia of the implicit stationary point") {
  DeviceParams p;
  p.H1 = 1.0;
  p.H2 = 10.0;
  p.alpha_T = 1e-4;
  StepControl c;
  c.algorithm = Algo0D::Implicit;
  c.drive = DriveMode::Stress;
  c.tau = 0.02;
  DeviceStepper st(p, c);
  DeviceState0D s;
  s.theta = p.theta0;
  StepReport rep;
  for (int i = 1; i <= 5; ++i) s = st.step(s, 20.0 * i, &rep);
  // unknowns (eps, q, eta, theta, T): sup variables are (eta, theta)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.hessian);
  int negatives = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < 0) ++negatives;
  CHECK(negatives == 2);
  // mechanical block positive definite
  Eigen::Matrix2d mech = rep.hessian.topLeftCorner(2, 2);
  CHECK(mech(0, 0) > 0);
  CHECK(mech.determinant() > 0);
}

TEST_CASE("Legendre duality round trip via golden section") {
  DeviceParams p;
  p.alpha_T = 3e-4;
  std::uniform_real_distribution<double> ud(-0.05, 0.05);
  std::uniform_real_distribution<double> ut(260, 340);
  // independent long-double free energy so the flat maximum can be located
  // below the double round-off floor
  auto psi_ld = [&](long double eps, long double q, long double th) -> long double {
    long double de = eps - q, dt = th - p.theta0;
    return 0.5L * p.E * de * de + p.E * p.alpha_T * (q - eps) * dt +
           p.C * (dt - th * std::log(th / (long double)p.theta0));
  };
  auto golden_max = [&](auto f, long double a, long double b) {
    const long double gr = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    long double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    for (int it = 0; it < 120; ++it) {
      if (f(c1) > f(c2)) b = c2; else a = c1;
      c1 = b - gr * (b - a);
      c2 = a + gr * (b - a);
    }
    long double m = 0.5L * (a + b);
    // parabolic vertex polish; h balances cubic bias against round-off
    for (long double h : {1e-2L, 1e-4L}) {
      long double f0 = f(m - h), f1 = f(m), f2 = f(m + h);
      m -= h * (f2 - f0) / (2.0L * (f2 - 2.0L * f1 + f0));
    }
    return m;
  };
  for (int trial = 0; trial < 10; ++trial) {
    double eps = ud(rng), q = ud(rng), theta = ut(rng);
    FreeEnergyEval e = free_energy(eps, q, theta, p);
    double eta = -e.grad[2];
    auto f = [&](long double th) { return psi_ld(eps, q, th) + th * (long double)eta; };
    double th_star = static_cast<double>(golden_max(f, 100.0L, 600.0L));
    CHECK(std::abs(th_star - theta) <= 1e-10 * theta);
  }
}

TEST_CASE("canonical closed forms of the footnote device") {
  DeviceParams p;
  p.E = 0.0;
  p.alpha_T = 0.0;
  // pure heat store: e(eta) = psi + theta*eta at theta(eta)
  for (double eta : {-0.3, 0.0, 0.4}) {
    double theta = p.theta0 * std::exp(eta / p.C);
    double e = free_energy(0, 0, theta, p).psi + theta * eta;
    CHECK(e == doctest::Approx(canonical_internal_energy(eta, p)).epsilon(1e-12));
  }
  // single dashpot: v(deps, deta; theta) = inf_T [phi(T/theta deps) - T deta]
  double H = 5.0, theta = 300.0, deps = 0.2, deta = 0.01;
  auto v_of = [&](double T) {
    return 0.5 * H * (T / theta * deps) * (T / theta * deps) - T * deta;
  };
  double vmin = 1e300, Tmin = 0;
  for (double T = 1.0; T < 50000.0; T += 1.0)
    if (v_of(T) < vmin) { vmin = v_of(T); Tmin = T; }
  for (double T = Tmin - 1.0; T < Tmin + 1.0; T += 1e-4)
    vmin = std::min(vmin, v_of(T));
  CHECK(canonical_dissipation_dual(deps, deta, theta, H) ==
        doctest::Approx(vmin).epsilon(1e-5));
}

TEST_CASE("energy identity for stress-driven adiabatic runs") {
  DeviceParams p;
  p.H1 = 0.5;
  p.H2 = 8.0;
  p.alpha_T = 1e-4;
  auto run = [&](double tau) {
    StepControl c;
    c.algorithm = Algo0D::Implicit;
    c.drive = DriveMode::Stress;
    c.tau = tau;
    DeviceStepper st(p, c);
    DeviceState0D s;
    s.theta = p.theta0;
    double drift = 0.0;
    int n = static_cast<int>(1.0 / tau);
    for (int i = 1; i <= n; ++i) {
      DeviceState0D sn = s;
      double sig = 30.0 * i * tau;
      s = st.step(s, sig);
      double en = free_energy(sn.eps, sn.q, sn.theta, p).psi + sn.theta * sn.eta;
      double e1 = free_energy(s.eps, s.q, s.theta, p).psi + s.theta * s.eta;
      drift += std::abs(e1 - en - sig * (s.eps - sn.eps));
    }
    return drift;
  };
  double d1 = run(0.02);
  double d2 = run(0.01);
  CHECK(d1 / d2 > 1.5); // first-order in tau
  CHECK(d2 < 0.5);
}
