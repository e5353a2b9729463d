#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "optoskin/events.hpp"
#include "optoskin/synth.hpp"

namespace optoskin::test {

inline Event ev(std::int64_t t, int u, int v, Polarity p = Polarity::On) {
  return Event{t, static_cast<std::uint16_t>(u), static_cast<std::uint16_t>(v), p, 0};
}

/// Ordinals follow vector position, as if read from a file.
inline EventStream stream_of(std::vector<Event> events, CameraId cam = CameraId::Cam1) {
  for (std::size_t i = 0; i < events.size(); ++i) events[i].ordinal = static_cast<std::uint32_t>(i);
  return EventStream(cam, std::move(events));
}

/// n events uniform over the frame and over [0, duration_us).
inline std::vector<Event> random_events(std::size_t n, std::int64_t duration_us, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> t(0, duration_us - 1);
  std::uniform_int_distribution<int> u(0, kSensorWidth - 1), v(0, kSensorHeight - 1), p(0, 1);
  std::vector<Event> out(n);
  for (auto& e : out) e = ev(t(rng), u(rng), v(rng), p(rng) ? Polarity::On : Polarity::Off);
  return out;
}

/// Small recording: a few grid points (rows of up to 20), light bursts,
/// sparse background.
inline SynthSpec small_spec(int points = 10, int repetitions = 1, std::uint64_t seed = 3) {
  SynthSpec spec;
  const int columns = points < 20 ? points : 20;
  spec.layout = SensorLayout::meander(columns, (points + columns - 1) / columns, 4.0, {12.0, 40.0});
  spec.layout.repetitions = repetitions;
  spec.burst_events_per_press_per_camera = 2000;
  spec.background_rate_per_camera = 500;
  spec.seed = seed;
  return spec;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("optoskin_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace optoskin::test
