#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rtfdoa/common.hpp"
#include "rtfdoa/geometry.hpp"

namespace rtfdoa {

/// Anechoic head-mounted prototype RTF vectors on an azimuth grid.
struct PrototypeDatabase {
  std::vector<double> directions;  // degrees, strictly increasing in [-180, 180)
  std::size_t bins = 0;            // K = fft_size / 2 + 1
  std::size_t mics = 0;            // M head-mounted microphones
  std::vector<Complex> vectors;    // [I x K x M]
  std::string geometry_id;
  double sample_rate = 16000.0;
  std::size_t fft_size = 512;

  std::span<const Complex> at(std::size_t i, std::size_t k) const {
    return {vectors.data() + (i * bins + k) * mics, mics};
  }
  std::span<Complex> at(std::size_t i, std::size_t k) { return {vectors.data() + (i * bins + k) * mics, mics}; }

  /// Checks shapes, the direction grid, and that every entry (i, k, 0) equals 1 within `tol`.
  void validate(double tol = 0.0) const;
};

/// -180, -175, ..., 175 (I = 72).
std::vector<double> default_direction_grid(double step_deg = 5.0);

/// Far-field plane-wave prototypes for the head-mounted microphones of `geometry`,
/// normalised to the first microphone.
PrototypeDatabase generate_prototypes(const ArrayGeometry& geometry, std::span<const double> directions,
                                      double sample_rate, std::size_t fft_size);

/// One JSON header line {"format", "geometry_id", "sample_rate", "fft_size", "directions",
/// "M", "K", "encoding"} followed by little-endian float32 pairs (re, im) in [I x K x M] order.
void save_prototypes(const std::filesystem::path& path, const PrototypeDatabase& db);
PrototypeDatabase load_prototypes(const std::filesystem::path& path);

}  // namespace rtfdoa
