#include "rtfdoa/geometry.hpp"

#include <cmath>

namespace rtfdoa {

std::vector<Position> ArrayGeometry::positions() const {
  std::vector<Position> all = head;
  if (external) all.push_back(*external);
  return all;
}

std::string ArrayGeometry::id() const {
  std::string s = "freefield-" + std::to_string(head.size()) + "mic";
  if (head_shadow) s += "-sphere";
  return s;
}

void ArrayGeometry::validate() const {
  if (head.size() < 2) throw ConfigError("geometry needs at least two head-mounted microphones");
  if (channel_count() > static_cast<std::size_t>(kMaxChannels)) throw ConfigError("too many microphones");
  const auto all = positions();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!all[i].allFinite()) throw ConfigError("microphone position is not finite");
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if ((all[i] - all[j]).norm() < 1e-9) {
        throw ConfigError("microphones " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " coincide");
      }
    }
  }
  if (head_shadow && !(head_radius > 0.0)) throw ConfigError("head radius must be positive");
}

ArrayGeometry ArrayGeometry::binaural_default() {
  constexpr double kHalfSpacing = 0.0075;
  constexpr double kHalfEarDistance = 0.08;
  ArrayGeometry g;
  g.head = {Position(kHalfSpacing, kHalfEarDistance, 0.0), Position(-kHalfSpacing, kHalfEarDistance, 0.0),
            Position(kHalfSpacing, -kHalfEarDistance, 0.0), Position(-kHalfSpacing, -kHalfEarDistance, 0.0)};
  return g;
}

ArrayGeometry ArrayGeometry::binaural_with_external(double azimuth_deg, double distance_m) {
  ArrayGeometry g = binaural_default();
  g.external = direction_vector(azimuth_deg) * distance_m;
  return g;
}

Position direction_vector(double azimuth_deg, double elevation_deg) {
  const double az = deg_to_rad(azimuth_deg), el = deg_to_rad(elevation_deg);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

double head_shadow_gain(const Position& ear_axis, const Position& u, double omega, double head_radius) {
  constexpr double kAlphaMin = 0.1;
  constexpr double kThetaMinDeg = 150.0;
  const double cos_inc = std::clamp(ear_axis.dot(u), -1.0, 1.0);
  const double theta_deg = rad_to_deg(std::acos(cos_inc));
  const double alpha = (1.0 + kAlphaMin / 2.0) + (1.0 - kAlphaMin / 2.0) * std::cos(theta_deg / kThetaMinDeg * kPi);
  const double w = omega * head_radius / (2.0 * kSpeedOfSound);
  return std::sqrt((1.0 + alpha * alpha * w * w) / (1.0 + w * w));
}

CVector steering_vector(const std::vector<Position>& mics, std::size_t head_count, const Position& u, double omega,
                        bool head_shadow, double head_radius) {
  CVector h(static_cast<Eigen::Index>(mics.size()));
  for (std::size_t m = 0; m < mics.size(); ++m) {
    const double tau = -mics[m].dot(u) / kSpeedOfSound;
    double mag = 1.0;
    if (head_shadow && m < head_count && mics[m].y() != 0.0) {
      const Position ear(0.0, mics[m].y() > 0.0 ? 1.0 : -1.0, 0.0);
      mag = head_shadow_gain(ear, u, omega, head_radius);
    }
    h(static_cast<Eigen::Index>(m)) = std::polar(mag, -omega * tau);
  }
  return h;
}

namespace {
nlohmann::json pos_json(const Position& p) { return {p.x(), p.y(), p.z()}; }
Position pos_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("microphone position must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
}  // namespace

nlohmann::json geometry_to_json(const ArrayGeometry& g) {
  nlohmann::json head = nlohmann::json::array();
  for (const auto& p : g.head) head.push_back(pos_json(p));
  nlohmann::json j{{"head", head}, {"head_shadow", g.head_shadow}, {"head_radius", g.head_radius}};
  j["external"] = g.external ? pos_json(*g.external) : nlohmann::json(nullptr);
  return j;
}

ArrayGeometry geometry_from_json(const nlohmann::json& j) {
  ArrayGeometry g;
  if (j.contains("preset")) {
    if (j.at("preset").get<std::string>() != "binaural4") throw ConfigError("unknown geometry preset");
    g = ArrayGeometry::binaural_default();
    if (j.contains("external_azimuth_deg")) {
      g.external = direction_vector(j.at("external_azimuth_deg").get<double>()) * j.value("external_distance_m", 1.6);
    }
  } else {
    for (const auto& p : j.at("head")) g.head.push_back(pos_from(p));
    if (j.contains("external") && !j.at("external").is_null()) g.external = pos_from(j.at("external"));
  }
  g.head_shadow = j.value("head_shadow", false);
  g.head_radius = j.value("head_radius", 0.0875);
  g.validate();
  return g;
}

}  // namespace rtfdoa
