#include "rtfdoa/prototypes.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace rtfdoa {

void PrototypeDatabase::validate(double tol) const {
  if (directions.empty()) throw ConfigError("prototype database has no directions");
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (!(directions[i] >= -180.0 && directions[i] < 180.0)) throw ConfigError("prototype direction outside [-180, 180)");
    if (i > 0 && !(directions[i] > directions[i - 1])) throw ConfigError("prototype directions must be strictly increasing");
  }
  if (mics < 1 || bins < 1 || vectors.size() != directions.size() * bins * mics) {
    throw ConfigError("prototype payload does not match its declared shape");
  }
  if (fft_size / 2 + 1 != bins) throw ConfigError("prototype bin count does not match fft_size");
  for (std::size_t i = 0; i < directions.size(); ++i) {
    for (std::size_t k = 0; k < bins; ++k) {
      if (std::abs(at(i, k)[0] - Complex(1.0, 0.0)) > tol) {
        throw ConfigError("prototype (" + std::to_string(i) + ", " + std::to_string(k) + ") lacks a unit reference entry");
      }
    }
  }
}

std::vector<double> default_direction_grid(double step_deg) {
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::llround(360.0 / step_deg));
  for (std::size_t i = 0; i < count; ++i) grid.push_back(-180.0 + step_deg * static_cast<double>(i));
  return grid;
}

PrototypeDatabase generate_prototypes(const ArrayGeometry& geometry, std::span<const double> directions,
                                      double sample_rate, std::size_t fft_size) {
  geometry.validate();
  if (fft_size < 2 || fft_size % 2 != 0) throw ConfigError("prototype fft_size must be even");
  if (!(sample_rate > 0.0)) throw ConfigError("prototype sample rate must be positive");

  PrototypeDatabase db;
  db.directions.assign(directions.begin(), directions.end());
  db.bins = fft_size / 2 + 1;
  db.mics = geometry.head_count();
  db.geometry_id = geometry.id();
  db.sample_rate = sample_rate;
  db.fft_size = fft_size;
  db.vectors.resize(db.directions.size() * db.bins * db.mics);

  for (std::size_t i = 0; i < db.directions.size(); ++i) {
    const Position u = direction_vector(db.directions[i]);
    for (std::size_t k = 0; k < db.bins; ++k) {
      const double omega = 2.0 * kPi * static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      const CVector h = steering_vector(geometry.head, geometry.head_count(), u, omega, geometry.head_shadow,
                                        geometry.head_radius);
      auto dst = db.at(i, k);
      dst[0] = Complex(1.0, 0.0);
      for (std::size_t m = 1; m < db.mics; ++m) dst[m] = h(static_cast<Eigen::Index>(m)) / h(0);
    }
  }
  db.validate();
  return db;
}

void save_prototypes(const std::filesystem::path& path, const PrototypeDatabase& db) {
  db.validate(1e-12);
  const nlohmann::json header{{"format", "rtfdoa-prototypes/1"},
                              {"geometry_id", db.geometry_id},
                              {"sample_rate", db.sample_rate},
                              {"fft_size", db.fft_size},
                              {"directions", db.directions},
                              {"M", db.mics},
                              {"K", db.bins},
                              {"encoding", "float32le"}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write prototype database " + path.string());
  os << header.dump() << '\n';
  std::vector<unsigned char> payload;
  payload.reserve(db.vectors.size() * 8);
  for (const Complex& c : db.vectors) {
    for (double part : {c.real(), c.imag()}) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(part));
      for (int b = 0; b < 4; ++b) payload.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFF));
    }
  }
  os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

PrototypeDatabase load_prototypes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open prototype database " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": missing prototype header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": bad prototype header: " + e.what());
  }
  PrototypeDatabase db;
  try {
    db.geometry_id = header.at("geometry_id").get<std::string>();
    db.sample_rate = header.at("sample_rate").get<double>();
    db.fft_size = header.at("fft_size").get<std::size_t>();
    db.directions = header.at("directions").get<std::vector<double>>();
    db.mics = header.at("M").get<std::size_t>();
    db.bins = header.value("K", db.fft_size / 2 + 1);
    if (header.value("encoding", std::string("float32le")) != "float32le") throw ConfigError("unsupported encoding");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": incomplete prototype header: " + e.what());
  }

  const std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t count = db.directions.size() * db.bins * db.mics;
  if (payload.size() != count * 8) throw ConfigError(path.string() + ": prototype payload size mismatch");
  db.vectors.resize(count);
  const auto read_float = [&](std::size_t at) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[at + b]) << (8 * b);
    return static_cast<double>(std::bit_cast<float>(bits));
  };
  for (std::size_t n = 0; n < count; ++n) db.vectors[n] = Complex(read_float(8 * n), read_float(8 * n + 4));
  db.validate(1e-6);
  return db;
}

}  // namespace rtfdoa
