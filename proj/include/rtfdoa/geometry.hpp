#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rtfdoa/common.hpp"

namespace rtfdoa {

using Position = Eigen::Vector3d;

/// Microphone layout in metres, head centre at the origin, x to the front, y to the left,
/// z up. Azimuth 0 deg is the front, +90 deg the left side.
struct ArrayGeometry {
  std::vector<Position> head;       // head-mounted microphones; head[0] is the reference
  std::optional<Position> external;  // spatially separated external microphone
  bool head_shadow = false;          // apply a rigid-sphere level term to head microphones
  double head_radius = 0.0875;

  std::size_t head_count() const { return head.size(); }
  std::size_t channel_count() const { return head.size() + (external ? 1 : 0); }
  /// All microphone positions, external last.
  std::vector<Position> positions() const;
  std::string id() const;

  /// Throws ConfigError on coincident microphones or an empty head array.
  void validate() const;

  /// Two microphones per side 15 mm apart (front, rear), sides 16 cm apart. Order: left front
  /// (reference), left rear, right front, right rear.
  static ArrayGeometry binaural_default();
  /// Same head array plus an external microphone at the given polar position.
  static ArrayGeometry binaural_with_external(double azimuth_deg, double distance_m);
};

/// Unit propagation-source direction for azimuth/elevation in degrees.
Position direction_vector(double azimuth_deg, double elevation_deg = 0.0);

/// Far-field transfer of a plane wave arriving from direction `u` at each microphone of
/// `mics`, at angular frequency omega: mag_m exp(-j omega tau_m), tau_m = -(p_m . u) / c.
/// With head shadow, head microphones (the first `head_count` entries) get a rigid-sphere
/// level term.
CVector steering_vector(const std::vector<Position>& mics, std::size_t head_count, const Position& u, double omega,
                        bool head_shadow, double head_radius);

/// Magnitude of a one-pole/one-zero rigid-sphere head-shadow filter for a microphone on the
/// ear whose outward axis is `ear_axis`.
double head_shadow_gain(const Position& ear_axis, const Position& u, double omega, double head_radius);

nlohmann::json geometry_to_json(const ArrayGeometry& g);
ArrayGeometry geometry_from_json(const nlohmann::json& j);

}  // namespace rtfdoa
