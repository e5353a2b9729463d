#include "optoskin/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "optoskin/error.hpp"

namespace optoskin {

const char* to_string(CameraId c) { return c == CameraId::Cam1 ? "cam1" : "cam2"; }

EventStream::EventStream(CameraId camera, std::vector<Event> events, RoiBand roi, std::int64_t time_offset_us)
    : camera_(camera), roi_(roi), time_offset_us_(time_offset_us) {
  if (!std::is_sorted(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t_us < b.t_us; })) {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
  }
  events_ = std::make_shared<const std::vector<Event>>(std::move(events));
}

EventStream::EventStream(Presorted, CameraId camera, std::shared_ptr<const std::vector<Event>> events, RoiBand roi,
                         std::int64_t time_offset_us)
    : camera_(camera), events_(std::move(events)), roi_(roi), time_offset_us_(time_offset_us) {}

EventStream EventStream::with_time_offset(std::int64_t offset_us) const {
  return EventStream(Presorted{}, camera_, events_, roi_, offset_us);
}

std::pair<std::size_t, std::size_t> EventStream::index_range(std::int64_t t0_us, std::int64_t t1_us) const {
  const auto& ev = *events_;
  const std::int64_t raw0 = t0_us - time_offset_us_;
  const std::int64_t raw1 = t1_us - time_offset_us_;
  auto lo = std::lower_bound(ev.begin(), ev.end(), raw0, [](const Event& e, std::int64_t t) { return e.t_us < t; });
  auto hi = std::lower_bound(lo, ev.end(), raw1, [](const Event& e, std::int64_t t) { return e.t_us < t; });
  return {static_cast<std::size_t>(lo - ev.begin()), static_cast<std::size_t>(hi - ev.begin())};
}

EventSlice::EventSlice(const EventStream& stream, std::size_t first, std::size_t last)
    : buffer_(stream.buffer()), first_(first), last_(last), time_offset_us_(stream.time_offset_us()) {}

std::span<const Event> EventSlice::events() const {
  if (!buffer_) return {};
  return std::span<const Event>(*buffer_).subspan(first_, last_ - first_);
}

SensorLayout SensorLayout::meander(int columns, int rows, double spacing_mm, Point2 origin) {
  SensorLayout layout;
  layout.grid_spacing_mm = spacing_mm;
  layout.grid_points.reserve(static_cast<std::size_t>(columns * rows));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < columns; ++c) {
      const int col = (r % 2 == 0) ? c : columns - 1 - c;
      layout.grid_points.push_back({origin.x + col * spacing_mm, origin.y + r * spacing_mm});
    }
  }
  return layout;
}

double SensorLayout::diagonal_mm() const { return side_mm * std::sqrt(2.0); }

void SensorLayout::validate() const {
  if (side_mm <= 0) throw ConfigError("layout: side_mm must be positive");
  if (repetitions < 1) throw ConfigError("layout: repetitions must be >= 1");
  if (press_duration_s <= 0) throw ConfigError("layout: press_duration_s must be positive");
  for (std::size_t i = 0; i < grid_points.size(); ++i) {
    const auto& p = grid_points[i];
    if (!(p.x >= 0 && p.x <= side_mm && p.y >= 0 && p.y <= side_mm)) {
      throw ConfigError("layout: grid point " + std::to_string(i) + " lies outside the sensor");
    }
  }
}

std::vector<Event> crop_events(std::span<const Event> events, RoiBand band) {
  std::vector<Event> out;
  for (const auto& e : events) {
    if (e.v >= band.v_lo && e.v <= band.v_hi) out.push_back(e);
  }
  return out;
}

EventStream crop_roi(const EventStream& stream, int v_lo, int v_hi) {
  if (!(v_lo >= 0 && v_lo < v_hi && v_hi <= kSensorHeight)) {
    throw std::out_of_range("crop_roi: need 0 <= v_lo < v_hi <= 480, got [" + std::to_string(v_lo) + ", " +
                            std::to_string(v_hi) + "]");
  }
  const RoiBand band{v_lo, v_hi};
  return EventStream(stream.camera(), crop_events(stream.events(), band), band, stream.time_offset_us());
}

std::int64_t bin_width_us(double bin_s) {
  if (!(bin_s > 0)) throw std::invalid_argument("bin width must be positive");
  const auto us = std::llround(bin_s * 1e6);
  if (us < 1) throw std::invalid_argument("bin width below 1 us");
  return us;
}

std::vector<std::int64_t> bin_counts(std::span<const std::int64_t> times_us, std::int64_t start_us, std::int64_t bin_us,
                                     std::size_t n_bins) {
  std::vector<std::int64_t> counts(n_bins, 0);
  for (auto t : times_us) {
    if (t < start_us) continue;
    const auto idx = static_cast<std::size_t>((t - start_us) / bin_us);
    if (idx < n_bins) ++counts[idx];
  }
  return counts;
}

RateSeries event_rate_histogram(std::span<const std::int64_t> sorted_times_us, double bin_s) {
  const auto bin_us = bin_width_us(bin_s);
  RateSeries series;
  series.bin_s = us_to_seconds(bin_us);
  if (sorted_times_us.empty()) return series;
  const auto first = sorted_times_us.front();
  const auto last = sorted_times_us.back();
  const auto n_bins = static_cast<std::size_t>((last - first) / bin_us) + 1;
  series.start_s = us_to_seconds(first);
  const auto counts = bin_counts(sorted_times_us, first, bin_us, n_bins);
  series.values.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) series.values[i] = static_cast<double>(counts[i]) / series.bin_s;
  return series;
}

RateSeries event_rate_histogram(const EventStream& stream, double bin_s) {
  std::vector<std::int64_t> times(stream.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = stream.aligned_time(i);
  return event_rate_histogram(times, bin_s);
}

double bit_rate(const EventStream& stream, double t0_s, double t1_s, int bits_per_event) {
  if (!(t1_s > t0_s)) throw std::invalid_argument("bit_rate: need t1 > t0");
  const auto [lo, hi] = stream.index_range(seconds_to_us(t0_s), seconds_to_us(t1_s));
  const double bytes = static_cast<double>(hi - lo) * bits_per_event / 8.0;
  return bytes / (t1_s - t0_s) / 1000.0;
}

}  // namespace optoskin
