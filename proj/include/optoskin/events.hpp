#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace optoskin {

inline constexpr int kSensorWidth = 640;
inline constexpr int kSensorHeight = 480;

enum class CameraId : std::uint8_t { Cam1 = 0, Cam2 = 1 };
enum class Polarity : std::uint8_t { Off = 0, On = 1 };

inline constexpr int index_of(CameraId c) { return static_cast<int>(c); }
const char* to_string(CameraId c);

struct Point2 {
  double x{0.0};
  double y{0.0};
};

/// One DVS brightness-change report. `ordinal` is the event's position in the
/// stream it was first read or generated into; it keys stochastic thinning and
/// is not part of event identity.
struct Event {
  std::int64_t t_us{0};
  std::uint16_t u{0};
  std::uint16_t v{0};
  Polarity polarity{Polarity::On};
  std::uint32_t ordinal{0};

  friend bool operator==(const Event& a, const Event& b) {
    return a.t_us == b.t_us && a.u == b.u && a.v == b.v && a.polarity == b.polarity;
  }
};

/// Inclusive vertical crop band in pixels.
struct RoiBand {
  int v_lo{200};
  int v_hi{360};
};

/// Time-ordered event sequence of one camera. Immutable once built; the event
/// buffer is shared between copies, so copying a stream is cheap.
class EventStream {
 public:
  EventStream() : EventStream(CameraId::Cam1, {}) {}
  /// Sorts by timestamp (stable, so equal timestamps keep input order).
  EventStream(CameraId camera, std::vector<Event> events, RoiBand roi = {}, std::int64_t time_offset_us = 0);

  CameraId camera() const { return camera_; }
  std::span<const Event> events() const { return *events_; }
  const std::shared_ptr<const std::vector<Event>>& buffer() const { return events_; }
  RoiBand roi() const { return roi_; }
  std::int64_t time_offset_us() const { return time_offset_us_; }
  std::size_t size() const { return events_->size(); }
  bool empty() const { return events_->empty(); }

  /// Timestamp after synchronization: raw timestamp plus the stream offset.
  std::int64_t aligned_time(std::size_t i) const { return (*events_)[i].t_us + time_offset_us_; }

  /// Same events, different synchronization offset.
  EventStream with_time_offset(std::int64_t offset_us) const;

  /// Index range [first, last) of events whose aligned time lies in [t0_us, t1_us).
  std::pair<std::size_t, std::size_t> index_range(std::int64_t t0_us, std::int64_t t1_us) const;

 private:
  struct Presorted {};
  EventStream(Presorted, CameraId camera, std::shared_ptr<const std::vector<Event>> events, RoiBand roi,
              std::int64_t time_offset_us);

  CameraId camera_;
  std::shared_ptr<const std::vector<Event>> events_;
  RoiBand roi_;
  std::int64_t time_offset_us_;
};

/// A contiguous, shared view into an EventStream's buffer (used by trials so
/// per-press slices do not copy the recording).
class EventSlice {
 public:
  EventSlice() = default;
  EventSlice(const EventStream& stream, std::size_t first, std::size_t last);

  std::span<const Event> events() const;
  std::int64_t time_offset_us() const { return time_offset_us_; }
  std::size_t size() const { return last_ - first_; }
  bool empty() const { return first_ == last_; }

 private:
  std::shared_ptr<const std::vector<Event>> buffer_;
  std::size_t first_{0};
  std::size_t last_{0};
  std::int64_t time_offset_us_{0};
};

struct RateSeries {
  double start_s{0.0};
  double bin_s{0.0};
  std::vector<double> values;  // events per second

  double bin_start(std::size_t i) const { return start_s + static_cast<double>(i) * bin_s; }
  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

struct SensorLayout {
  double side_mm{100.0};
  double thickness_mm{4.0};
  std::vector<Point2> grid_points;
  double grid_spacing_mm{4.0};
  int repetitions{10};
  double press_duration_s{0.55};
  int bits_per_event{21};
  double skin_area_mm2{9328.0};
  double probed_area_mm2{4620.0};

  /// Meander raster of `columns` x `rows` points at `grid_spacing_mm`, rows
  /// alternating direction, starting at `origin`.
  static SensorLayout meander(int columns = 25, int rows = 10, double spacing_mm = 4.0, Point2 origin = {2.0, 40.0});

  double diagonal_mm() const;
  Point2 center() const { return {side_mm / 2.0, side_mm / 2.0}; }
  /// Throws ConfigError when a grid point falls outside [0, side]^2.
  void validate() const;
};

EventStream crop_roi(const EventStream& stream, int v_lo, int v_hi);

/// Events of `events` inside the inclusive band, order preserved.
std::vector<Event> crop_events(std::span<const Event> events, RoiBand band);

/// Counts per fixed-width bin starting at `start_us`; timestamps outside
/// [start_us, start_us + n_bins*bin_us) are ignored. Input need not be sorted.
std::vector<std::int64_t> bin_counts(std::span<const std::int64_t> times_us, std::int64_t start_us, std::int64_t bin_us,
                                     std::size_t n_bins);

/// Rounds a bin width in seconds to whole microseconds (throws std::invalid_argument below 1 us).
std::int64_t bin_width_us(double bin_s);

/// Histogram of aligned timestamps; bins tile [t_first, t_last].
RateSeries event_rate_histogram(const EventStream& stream, double bin_s);
RateSeries event_rate_histogram(std::span<const std::int64_t> sorted_times_us, double bin_s);

/// Data rate in kB/s of the events inside [t0_s, t1_s) of aligned time.
double bit_rate(const EventStream& stream, double t0_s, double t1_s, int bits_per_event);

inline std::int64_t seconds_to_us(double s) { return std::llround(s * 1e6); }
inline double us_to_seconds(std::int64_t us) { return static_cast<double>(us) * 1e-6; }

}  // namespace optoskin
