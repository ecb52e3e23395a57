#pragma once

// Harmonic state-space model of the instantaneous power drawn by the robot.
// The state holds the base term alpha_0 followed by (alpha_j, beta_j) pairs
// that rotate at j times the base angular frequency; parameter changes shift
// alpha_0 only.

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "eaplan/coverage_planner.hpp"
#include "eaplan/csv.hpp"
#include "eaplan/error.hpp"

namespace eaplan {

using EnergyState = Eigen::VectorXd;

struct EnergyModel {
  int order = 0;
  double period = 0.0;
  double omega = 0.0;
  int rho = 0;
  int sigma = 0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::RowVectorXd C;

  int m() const { return 2 * order + 1; }
  int n() const { return rho + sigma; }
};

/// Fourier coefficients a_0..a_r and b_1..b_r of
///   h(t) = a_0/T + (2/T) sum_j (a_j cos(w j t) + b_j sin(w j t)).
struct FourierCoefficients {
  std::vector<double> a;
  std::vector<double> b;

  int order() const { return static_cast<int>(b.size()); }
};

inline double fourier_value(const FourierCoefficients& f, double period, double t) {
  const double w = 2.0 * kPi / period;
  double sum = 0.0;
  for (std::size_t j = 1; j < f.a.size(); ++j) {
    const double wt = w * static_cast<double>(j) * t;
    sum += f.a[j] * std::cos(wt) + f.b[j - 1] * std::sin(wt);
  }
  return f.a[0] / period + (2.0 / period) * sum;
}

inline EnergyModel build_model(int order, double period, int rho, int sigma) {
  if (order < 1) throw Error(Errc::InvalidOrder, "order must be >= 1");
  if (!(period > 0.0) || !std::isfinite(period)) throw Error(Errc::InvalidPeriod, "period must be positive");
  if (rho < 0 || sigma < 0) throw Error(Errc::InvalidArgument, "negative parameter count");
  EnergyModel model;
  model.order = order;
  model.period = period;
  model.omega = 2.0 * kPi / period;
  model.rho = rho;
  model.sigma = sigma;
  const int m = model.m();
  model.A = Eigen::MatrixXd::Zero(m, m);
  for (int j = 1; j <= order; ++j) {
    const int k = 2 * j - 1;
    model.A(k, k + 1) = model.omega * j;
    model.A(k + 1, k) = -model.omega * j;
  }
  model.B = Eigen::MatrixXd::Zero(m, rho + sigma);
  for (int k = rho; k < rho + sigma; ++k) model.B(0, k) = 1.0;
  model.C = Eigen::RowVectorXd::Zero(m);
  model.C(0) = 1.0 / period;
  for (int j = 1; j <= order; ++j) model.C(2 * j - 1) = 1.0 / period;
  return model;
}

/// State whose zero-input output reproduces the Fourier series exactly:
/// q0 = (a_0, 2 a_1, 2 b_1, ..., 2 a_r, 2 b_r).
inline EnergyState initial_state(const EnergyModel& model, const FourierCoefficients& f) {
  if (static_cast<int>(f.a.size()) != model.order + 1 || static_cast<int>(f.b.size()) != model.order)
    throw Error(Errc::LengthMismatch, "expected " + std::to_string(model.order + 1) + " a and " +
                                          std::to_string(model.order) + " b coefficients");
  EnergyState q(model.m());
  q(0) = f.a[0];
  for (int j = 1; j <= model.order; ++j) {
    q(2 * j - 1) = 2.0 * f.a[j];
    q(2 * j) = 2.0 * f.b[j - 1];
  }
  return q;
}

/// Exact discrete transition e^{A h}: a planar rotation by w j h per block.
inline Eigen::MatrixXd transition(const EnergyModel& model, double h) {
  const int m = model.m();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(m, m);
  phi(0, 0) = 1.0;
  for (int j = 1; j <= model.order; ++j) {
    const int k = 2 * j - 1;
    const double angle = model.omega * j * h;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    phi(k, k) = c;
    phi(k, k + 1) = s;
    phi(k + 1, k) = -s;
    phi(k + 1, k + 1) = c;
  }
  return phi;
}

inline void rotate_in_place(const EnergyModel& model, EnergyState& q, double h) {
  for (int j = 1; j <= model.order; ++j) {
    const int k = 2 * j - 1;
    const double angle = model.omega * j * h;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double alpha = q(k);
    const double beta = q(k + 1);
    q(k) = c * alpha + s * beta;
    q(k + 1) = -s * alpha + c * beta;
  }
}

/// Zero-input propagation over a fixed step with the rotations cached.
class Propagator {
 public:
  Propagator(const EnergyModel& model, double h) {
    for (int j = 1; j <= model.order; ++j) {
      cos_.push_back(std::cos(model.omega * j * h));
      sin_.push_back(std::sin(model.omega * j * h));
    }
  }

  void operator()(EnergyState& q) const {
    for (std::size_t j = 0; j < cos_.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(2 * j + 1);
      const double alpha = q(k);
      const double beta = q(k + 1);
      q(k) = cos_[j] * alpha + sin_[j] * beta;
      q(k + 1) = -sin_[j] * alpha + cos_[j] * beta;
    }
  }

 private:
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// One step of q' = A q + B u with u held over h.
inline EnergyState step(const EnergyModel& model, const EnergyState& q, const Eigen::VectorXd& u, double h) {
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "step must be positive");
  if (u.size() != model.n()) throw Error(Errc::LengthMismatch, "input length differs from rho + sigma");
  EnergyState next = q;
  rotate_in_place(model, next, h);
  next += model.B * u * h;
  return next;
}

inline double output(const EnergyModel& model, const EnergyState& q) { return model.C.dot(q); }

/// Applies a parameter change u (watts per affected entry) as an instant
/// shift of alpha_0 by T * B u, so the output moves by exactly sum(B u).
/// Equivalent to step() with u * T / h held over a single step h.
inline EnergyState apply_change(const EnergyModel& model, const EnergyState& q, const Eigen::VectorXd& u) {
  if (u.size() != model.n()) throw Error(Errc::LengthMismatch, "input length differs from rho + sigma");
  EnergyState next = q;
  next += model.B * u * model.period;
  return next;
}

/// Model with a new period and the state rescaled so the output is unchanged.
inline std::pair<EnergyModel, EnergyState> with_period(const EnergyModel& model, const EnergyState& q, double period) {
  EnergyModel next = build_model(model.order, period, model.rho, model.sigma);
  return {std::move(next), q * (period / model.period)};
}

struct ScalingFactors {
  std::vector<double> nu;
  std::vector<double> tau;

  std::size_t size() const { return nu.size(); }
  double apply(std::size_t i, double c) const { return nu[i] * c + tau[i]; }
};

/// Affine map of each path parameter onto a share of the coverage time:
/// the lower bound maps to t_lower / rho and the upper bound to t_upper / rho,
/// where t_lower and t_upper are the coverage times of the configurations at
/// the lower and upper bounds.
inline ScalingFactors scale_path(const std::vector<Interval>& bounds, double t_lower, double t_upper) {
  ScalingFactors s;
  const double rho = static_cast<double>(bounds.size());
  if (!(t_upper >= t_lower) || !(t_lower > 0.0))
    throw Error(Errc::InvalidArgument, "need t_upper >= t_lower > 0");
  for (const auto& b : bounds) {
    if (!(b.hi > b.lo)) throw Error(Errc::DegenerateBounds, "path bounds must satisfy lower < upper");
    const double span = b.hi - b.lo;
    s.nu.push_back(((t_upper - t_lower) / span) / rho);
    s.tau.push_back((b.lo * (t_lower - t_upper) / span + t_lower) / rho);
  }
  return s;
}

/// Affine map of each computation parameter onto predicted power, exact at
/// both bounds.
inline ScalingFactors scale_compute(const std::vector<Interval>& bounds, const std::function<double(double)>& g) {
  ScalingFactors s;
  for (const auto& b : bounds) {
    if (!(b.hi > b.lo)) throw Error(Errc::DegenerateBounds, "compute bounds must satisfy lower < upper");
    double g_lo = 0.0;
    double g_hi = 0.0;
    try {
      g_lo = g(b.lo);
      g_hi = g(b.hi);
    } catch (const Error& e) {
      throw Error(Errc::PredictorUndefined, e.what());
    }
    const double span = b.hi - b.lo;
    s.nu.push_back((g_hi - g_lo) / span);
    s.tau.push_back(b.lo * (g_lo - g_hi) / span + g_lo);
  }
  return s;
}

inline ScalingFactors concat(const ScalingFactors& path, const ScalingFactors& compute) {
  ScalingFactors s = path;
  s.nu.insert(s.nu.end(), compute.nu.begin(), compute.nu.end());
  s.tau.insert(s.tau.end(), compute.tau.begin(), compute.tau.end());
  return s;
}

/// u = u_hat(c_now) - u_hat(c_prev) = diag(nu) (c_now - c_prev).
inline Eigen::VectorXd control_input(const ParamVector& c_prev, const ParamVector& c_now, const ScalingFactors& s) {
  if (c_prev.size() != c_now.size() || c_now.size() != s.size() || c_prev.path.size() != c_now.path.size())
    throw Error(Errc::LengthMismatch, "parameter vectors and scaling factors differ in length");
  Eigen::VectorXd u(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) u(static_cast<Eigen::Index>(i)) = s.nu[i] * (c_now[i] - c_prev[i]);
  return u;
}

/// Matrix entries as rows of matrix,row,col,value.
inline void write_model_csv(std::ostream& out, const EnergyModel& model) {
  out << "matrix,row,col,value\n";
  auto dump = [&](const char* name, const Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
      for (Eigen::Index j = 0; j < mat.cols(); ++j)
        out << name << ',' << i << ',' << j << ',' << csv::fmt(mat(i, j)) << '\n';
  };
  dump("A", model.A);
  dump("B", model.B);
  dump("C", model.C);
}

}  // namespace eaplan
