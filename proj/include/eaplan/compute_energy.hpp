#pragma once

// Computational energy: discrete power measurements per configuration and a
// piecewise-linear predictor between adjacent measured configurations.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eaplan/csv.hpp"
#include "eaplan/error.hpp"

namespace eaplan {

struct ComputeKnot {
  int param = 0;
  double power_w = 0.0;
  double t0 = 0.0;  // measurement interval, kept for provenance
  double tf = 0.0;
};

struct ComputeProfile {
  int device_id = 1;
  std::vector<ComputeKnot> knots;

  int min_param() const { return knots.front().param; }
  int max_param() const { return knots.back().param; }
};

inline void validate(const ComputeProfile& profile) {
  if (profile.device_id <= 0) throw Error(Errc::InvalidArgument, "device id must be positive");
  if (profile.knots.size() < 2) throw Error(Errc::TooFewKnots, "a profile needs at least two knots");
  for (std::size_t i = 0; i < profile.knots.size(); ++i) {
    const auto& k = profile.knots[i];
    if (!(k.power_w >= 0.0)) throw Error(Errc::InvalidArgument, "negative power at knot " + std::to_string(k.param));
    if (i > 0 && k.param <= profile.knots[i - 1].param)
      throw Error(Errc::UnsortedKnots, "knot parameters must be strictly increasing");
  }
}

/// Parses `param,power_w,t0,tf` CSV text (t0/tf optional).
inline ComputeProfile parse_profile(std::string_view text, int device_id = 1) {
  std::vector<std::string> header;
  const auto rows = csv::parse_numeric(text, &header);
  if (header.size() < 2 || header[0] != "param" || header[1] != "power_w")
    throw Error(Errc::ParseError, "expected header param,power_w,t0,tf");
  ComputeProfile profile;
  profile.device_id = device_id;
  for (const auto& row : rows) {
    if (row.size() < 2) throw Error(Errc::ParseError, "profile rows need param and power");
    if (row[0] != std::floor(row[0])) throw Error(Errc::ParseError, "parameter values must be integers");
    ComputeKnot k{static_cast<int>(row[0]), row[1], row.size() > 2 ? row[2] : 0.0, row.size() > 3 ? row[3] : 0.0};
    profile.knots.push_back(k);
  }
  validate(profile);
  return profile;
}

inline ComputeProfile load_profile(const std::string& path, int device_id = 1) {
  return parse_profile(csv::read_file(path), device_id);
}

/// Measurement layer: recorded power at a measured configuration.
inline double gamma(const ComputeProfile& profile, int c) {
  const auto it = std::lower_bound(profile.knots.begin(), profile.knots.end(), c,
                                   [](const ComputeKnot& k, int v) { return k.param < v; });
  if (it == profile.knots.end() || it->param != c)
    throw Error(Errc::NotMeasured, "configuration " + std::to_string(c) + " was not measured");
  return it->power_w;
}

/// Predictive layer: linear interpolation between the adjacent knots.
inline double predict(const ComputeProfile& profile, double c) {
  if (!(c >= profile.min_param()) || !(c <= profile.max_param()))
    throw Error(Errc::OutOfRange, "configuration " + csv::fmt(c) + " outside the measured range");
  auto upper = std::lower_bound(profile.knots.begin(), profile.knots.end(), c,
                                [](const ComputeKnot& k, double v) { return k.param < v; });
  if (upper->param == c) return upper->power_w;
  const auto lower = upper - 1;
  const double span = upper->param - lower->param;
  return (upper->power_w - lower->power_w) * (c - lower->param) / span + lower->power_w;
}

}  // namespace eaplan
