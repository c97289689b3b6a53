#include <cmath>
#include <memory>
#include <numbers>

#include "bgs/oracles.hpp"

namespace bgs::oracles {

namespace {

constexpr double kPi = std::numbers::pi;

// Fourth-order central difference.
template <class F>
double central(F&& f, double x, double h) {
  return (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
}

template <class F>
double d_dx(F&& f, const Point& p, double h) {
  return central([&](double x) { return f(Point{x, p.y}); }, p.x, h);
}

template <class F>
double d_dy(F&& f, const Point& p, double h) {
  return central([&](double y) { return f(Point{p.x, y}); }, p.y, h);
}

}  // namespace

MmsProblem::MmsProblem(coefficients::CoefficientModel model, double beta, Vec2 gravity, double buoyancy_sign,
                       FiniteDifferenceSteps steps)
    : model_(std::move(model)), beta_(beta), gravity_(gravity), sign_(buoyancy_sign), h_(steps) {}

double MmsProblem::stream(const Point& p, double t) {
  const double X = p.x * p.x * (1.0 - p.x) * (1.0 - p.x);
  const double s = std::sin(kPi * p.y);
  return X * s * s * std::exp(-t);
}

Vec2 MmsProblem::velocity(const Point& p, double t) {
  const double x = p.x;
  const double X = x * x * (1.0 - x) * (1.0 - x);
  const double Xp = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
  const double s = std::sin(kPi * p.y);
  const double E = std::exp(-t);
  return {X * kPi * std::sin(2.0 * kPi * p.y) * E, -Xp * s * s * E};
}

double MmsProblem::vorticity(const Point& p, double t) {
  const double x = p.x;
  const double X = x * x * (1.0 - x) * (1.0 - x);
  const double Xpp = 2.0 - 12.0 * x + 12.0 * x * x;
  const double s = std::sin(kPi * p.y);
  const double Ypp = 2.0 * kPi * kPi * std::cos(2.0 * kPi * p.y);
  return -(Xpp * s * s + X * Ypp) * std::exp(-t);
}

double MmsProblem::temperature(const Point& p, double t) { return p.x * std::sin(kPi * p.y) * std::exp(-t); }

Vec2 MmsProblem::temperature_gradient(const Point& p, double t) {
  const double E = std::exp(-t);
  return {std::sin(kPi * p.y) * E, kPi * p.x * std::cos(kPi * p.y) * E};
}

double MmsProblem::head(const Point& p, double t) {
  return std::cos(kPi * p.x) * std::cos(kPi * p.y) * std::exp(-t);
}

double MmsProblem::vorticity_fd(const Point& p, double t) const {
  const double h = h_.inner;
  return d_dx([t](const Point& q) { return velocity(q, t)[1]; }, p, h) -
         d_dy([t](const Point& q) { return velocity(q, t)[0]; }, p, h);
}

double MmsProblem::divergence_fd(const Point& p, double t) const {
  const double h = h_.inner;
  return d_dx([t](const Point& q) { return velocity(q, t)[0]; }, p, h) +
         d_dy([t](const Point& q) { return velocity(q, t)[1]; }, p, h);
}

Vec2 MmsProblem::f1(const Point& p, double t) const {
  const double hi = h_.inner, ho = h_.outer;
  const Vec2 z = velocity(p, t);
  const Vec2 dzdt{central([&](double s) { return velocity(p, s)[0]; }, t, hi),
                  central([&](double s) { return velocity(p, s)[1]; }, t, hi)};
  auto visc_rot = [&](const Point& q) { return model_.viscosity()(temperature(q, t)) * vorticity_fd(q, t); };
  const Vec2 curl{d_dy(visc_rot, p, ho), -d_dx(visc_rot, p, ho)};
  const double om = vorticity_fd(p, t);
  const double w = temperature(p, t);
  auto P = [t](const Point& q) { return head(q, t); };
  const Vec2 gradP{d_dx(P, p, hi), d_dy(P, p, hi)};
  Vec2 f{};
  for (int c = 0; c < 2; ++c) {
    const double adv = c == 0 ? -om * z[1] : om * z[0];
    f[c] = dzdt[c] + curl[c] + adv + sign_ * beta_ * w * gravity_[c] - gradP[c];
  }
  return f;
}

double MmsProblem::f2(const Point& p, double t) const {
  const double hi = h_.inner, ho = h_.outer;
  auto W = [t](const Point& q) { return temperature(q, t); };
  auto flux = [&](const Point& q, int c) {
    const double g = c == 0 ? d_dx(W, q, hi) : d_dy(W, q, hi);
    return model_.conductivity()(temperature(q, t)) * g;
  };
  const double div = d_dx([&](const Point& q) { return flux(q, 0); }, p, ho) +
                     d_dy([&](const Point& q) { return flux(q, 1); }, p, ho);
  const double dwdt = central([&](double s) { return temperature(p, s); }, t, hi);
  const Vec2 z = velocity(p, t);
  return dwdt - div + z[0] * d_dx(W, p, hi) + z[1] * d_dy(W, p, hi);
}

double MmsProblem::v1(const Point& p, double t) const { return head(p, t); }

double MmsProblem::v2(const Point& p, double t) const {
  auto W = [t](const Point& q) { return temperature(q, t); };
  const Vec2 n = unit_square_normal(p);
  const double dn = n[0] * d_dx(W, p, h_.inner) + n[1] * d_dy(W, p, h_.inner);
  return model_.conductivity()(temperature(p, t)) * dn;
}

Vec2 unit_square_normal(const Point& p) {
  const double dl = std::abs(p.x), dr = std::abs(1.0 - p.x);
  const double db = std::abs(p.y), dt = std::abs(1.0 - p.y);
  const double m = std::min({dl, dr, db, dt});
  if (m == dl) return {-1.0, 0.0};
  if (m == dr) return {1.0, 0.0};
  if (m == db) return {0.0, -1.0};
  return {0.0, 1.0};
}

solver::ProblemData MmsProblem::problem() const {
  auto self = std::make_shared<const MmsProblem>(*this);
  solver::ProblemData d;
  d.coefficients = model_;
  d.beta = beta_;
  d.buoyancy_sign = sign_;
  d.set_constant_gravity(gravity_);
  d.f1 = [self](const Point& p, double t) { return self->f1(p, t); };
  d.f2 = [self](const Point& p, double t) { return self->f2(p, t); };
  d.v1 = [self](const Point& p, double t) { return self->v1(p, t); };
  d.v2 = [self](const Point& p, double t) { return self->v2(p, t); };
  d.z0 = [](const Point& p, double t) { return velocity(p, t); };
  d.w0 = [](const Point& p, double t) { return temperature(p, t); };
  return d;
}

solver::ProblemData make_mms_problem(const coefficients::CoefficientModel& model, double beta, Vec2 gravity) {
  return MmsProblem(model, beta, gravity).problem();
}

solver::ProblemData make_decay_problem(const coefficients::CoefficientModel& model, double beta, Vec2 gravity) {
  solver::ProblemData d;
  d.coefficients = model;
  d.beta = beta;
  d.set_constant_gravity(gravity);
  d.z0 = [](const Point& p, double) { return MmsProblem::velocity(p, 0.0); };
  d.w0 = [](const Point& p, double) { return MmsProblem::temperature(p, 0.0); };
  return d;
}

solver::ProblemData make_cavity_problem(const coefficients::CoefficientModel& model, double beta, Vec2 gravity) {
  solver::ProblemData d;
  d.coefficients = model;
  d.beta = beta;
  d.set_constant_gravity(gravity);
  d.v2 = [](const Point& p, double) { return std::abs(p.y) < 1e-12 ? 1.0 : 0.0; };
  return d;
}

FieldErrors mms_errors(const fem::FunctionSpaces& spaces, const solver::State& state, double t) {
  FieldErrors e;
  for (std::size_t el = 0; el < spaces.elements.size(); ++el) {
    const auto& ed = spaces.elements[el];
    for (std::size_t q = 0; q < fem::kTriangleQuadPoints; ++q) {
      const Point& p = ed.qp_point[q];
      const double wq = ed.qp_weight[q];
      const fem::VelocitySample zh = fem::velocity_at_qp(spaces, state.z.values, el, q);
      const Vec2 z = MmsProblem::velocity(p, t);
      const double dz0 = zh.value[0] - z[0], dz1 = zh.value[1] - z[1];
      e.velocity_l2 += wq * (dz0 * dz0 + dz1 * dz1);
      const double dr = zh.rot() - MmsProblem::vorticity(p, t);
      e.velocity_rot += wq * dr * dr;
      const double dw = fem::p1_at_qp(spaces, state.w.values, el, q).value - MmsProblem::temperature(p, t);
      e.temperature_l2 += wq * dw * dw;
      const double dp = fem::p1_at_qp(spaces, state.P.values, el, q).value - MmsProblem::head(p, t);
      e.head_l2 += wq * dp * dp;
    }
  }
  e.velocity_l2 = std::sqrt(e.velocity_l2);
  e.velocity_rot = std::sqrt(e.velocity_rot);
  e.temperature_l2 = std::sqrt(e.temperature_l2);
  e.head_l2 = std::sqrt(e.head_l2);
  return e;
}

}  // namespace bgs::oracles
