#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "eaplan/energy_model.hpp"
#include "eaplan/error.hpp"

namespace eaplan {

struct EstimatorConfig {
  Eigen::MatrixXd process_noise;     // m x m, per second
  double measurement_noise = 1.0;    // W^2
  Eigen::MatrixXd initial_covariance;
};

struct Estimate {
  EnergyState q_hat;
  Eigen::MatrixXd covariance;
  double y_hat = 0.0;
};

/// Noise levels used when a scenario does not specify them: process noise
/// 1e-4 (P T)^2 I per second and measurement noise (0.01 P)^2 for a mean
/// power P, so both are expressed relative to the signal.
inline EstimatorConfig default_estimator_config(const EnergyModel& model, double mean_power) {
  const int m = model.m();
  const double scale = mean_power * model.period;
  EstimatorConfig cfg;
  cfg.process_noise = 1e-4 * scale * scale * Eigen::MatrixXd::Identity(m, m);
  cfg.measurement_noise = std::pow(0.01 * mean_power, 2);
  cfg.initial_covariance = 0.01 * scale * scale * Eigen::MatrixXd::Identity(m, m);
  return cfg;
}

inline Estimate make_estimate(const EnergyModel& model, const EnergyState& q0, const EstimatorConfig& cfg) {
  if (q0.size() != model.m()) throw Error(Errc::LengthMismatch, "state length differs from the model");
  if (!(cfg.measurement_noise > 0.0)) throw Error(Errc::InvalidArgument, "measurement noise must be positive");
  return {q0, cfg.initial_covariance, output(model, q0)};
}

/// Time update with the exact transition; the input enters as in step().
inline Estimate predict(const EnergyModel& model, const Estimate& est, const Eigen::VectorXd& u, double h,
                        const EstimatorConfig& cfg) {
  const Eigen::MatrixXd phi = transition(model, h);
  Estimate next;
  next.q_hat = step(model, est.q_hat, u, h);
  next.covariance = phi * est.covariance * phi.transpose() + cfg.process_noise * h;
  next.y_hat = output(model, next.q_hat);
  return next;
}

/// Scalar measurement update with H = C, Joseph form.
inline Estimate update(const EnergyModel& model, const Estimate& est, double measurement, const EstimatorConfig& cfg) {
  if (!std::isfinite(measurement)) throw Error(Errc::InvalidArgument, "non-finite measurement");
  const Eigen::RowVectorXd& H = model.C;
  const Eigen::VectorXd PHt = est.covariance * H.transpose();
  const double innovation_var = H.dot(PHt) + cfg.measurement_noise;
  const Eigen::VectorXd K = PHt / innovation_var;
  const double innovation = measurement - H.dot(est.q_hat);

  Estimate next;
  next.q_hat = est.q_hat + K * innovation;
  const Eigen::MatrixXd I_KH = Eigen::MatrixXd::Identity(model.m(), model.m()) - K * H;
  next.covariance = I_KH * est.covariance * I_KH.transpose() + cfg.measurement_noise * K * K.transpose();
  next.covariance = (0.5 * (next.covariance + next.covariance.transpose())).eval();
  next.y_hat = output(model, next.q_hat);
  return next;
}

inline double innovation(const EnergyModel& model, const Estimate& est, double measurement) {
  return measurement - output(model, est.q_hat);
}

}  // namespace eaplan
