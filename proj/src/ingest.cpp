#include "optoskin/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "optoskin/error.hpp"

namespace optoskin {

void SyncSpec::validate() const {
  if (n_taps < 2) throw ConfigError("sync: n_taps must be >= 2");
  if (!(tap_interval_s > 0)) throw ConfigError("sync: tap_interval_s must be positive");
  if (!(search_window_s > 0) || !(bin_s > 0)) throw ConfigError("sync: search window and bin must be positive");
  if (!(foot_factor > 0) || foot_factor > threshold_factor) {
    throw ConfigError("sync: foot_factor must be positive and at most threshold_factor");
  }
}

PressSchedule PressSchedule::regular(const SensorLayout& layout, const SyncSpec& sync, double period_s) {
  PressSchedule schedule;
  schedule.press_duration_s = layout.press_duration_s;
  const double first = (sync.n_taps - 1) * sync.tap_interval_s + sync.post_pause_s;
  int k = 0;
  for (int rep = 0; rep < layout.repetitions; ++rep) {
    for (std::size_t i = 0; i < layout.grid_points.size(); ++i, ++k) {
      schedule.presses.push_back({first + k * period_s, layout.grid_points[i], static_cast<int>(i), rep});
    }
  }
  return schedule;
}

void PressSchedule::validate() const {
  if (!(press_duration_s > 0)) throw ConfigError("schedule: press_duration_s must be positive");
  for (std::size_t i = 1; i < presses.size(); ++i) {
    if (!(presses[i].onset_s > presses[i - 1].onset_s)) {
      throw ConfigError("schedule: onsets must be strictly increasing (entry " + std::to_string(i) + ")");
    }
    if (presses[i].onset_s < presses[i - 1].onset_s + press_duration_s) {
      throw ConfigError("schedule: press windows overlap at entry " + std::to_string(i));
    }
  }
}

EventFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? EventFormat::Bin : EventFormat::Csv;
}

// ---------------------------------------------------------------------------
// Event files

namespace {

constexpr char kCsvHeader[] = "t_us,u,v,polarity";
constexpr char kMagic[4] = {'E', 'V', 'T', '1'};

template <typename T>
bool parse_field(std::string_view& rest, T& out, bool last) {
  const auto comma = rest.find(',');
  if (last != (comma == std::string_view::npos)) return false;
  auto field = rest.substr(0, comma);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || ptr != field.data() + field.size()) return false;
  rest = last ? std::string_view{} : rest.substr(comma + 1);
  return true;
}

bool make_event(std::int64_t t, long long u, long long v, long long pol, Event& e) {
  if (t < 0 || u < 0 || u >= kSensorWidth || v < 0 || v >= kSensorHeight || (pol != 0 && pol != 1)) return false;
  e.t_us = t;
  e.u = static_cast<std::uint16_t>(u);
  e.v = static_cast<std::uint16_t>(v);
  e.polarity = pol ? Polarity::On : Polarity::Off;
  return true;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open event file " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return data;
}

void check_malformed(const std::filesystem::path& path, const ReadReport& rep) {
  if (rep.lines > 0 && rep.malformed * 100 > rep.lines) {
    throw FormatError(path.string() + ": " + std::to_string(rep.malformed) + " of " + std::to_string(rep.lines) +
                      " records malformed (limit 1%)");
  }
}

std::vector<Event> parse_csv(const std::filesystem::path& path, const std::string& data, ReadReport& rep) {
  std::vector<Event> events;
  std::size_t pos = 0;
  bool first_line = true;
  while (pos < data.size()) {
    auto end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    std::string_view line(data.data() + pos, end - pos);
    pos = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    if (first_line) {
      first_line = false;
      if (line == kCsvHeader) continue;
    }
    ++rep.lines;
    std::string_view rest = line;
    std::int64_t t = 0;
    long long u = 0, v = 0, pol = 0;
    Event e;
    if (parse_field(rest, t, false) && parse_field(rest, u, false) && parse_field(rest, v, false) &&
        parse_field(rest, pol, true) && make_event(t, u, v, pol, e)) {
      e.ordinal = static_cast<std::uint32_t>(events.size());
      events.push_back(e);
    } else {
      ++rep.malformed;
    }
  }
  check_malformed(path, rep);
  return events;
}

template <typename T>
T load_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return value;
}

template <typename T>
void store_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  const auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::vector<Event> parse_bin(const std::filesystem::path& path, const std::string& data, ReadReport& rep) {
  if (data.size() < kBinHeaderBytes || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw FormatError(path.string() + ": missing EVT1 header");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  if (bytes[4] != kBinVersion) throw FormatError(path.string() + ": unsupported version " + std::to_string(bytes[4]));
  const auto count = load_le<std::uint64_t>(bytes + 8);
  if (data.size() != kBinHeaderBytes + count * kBinRecordBytes) {
    throw FormatError(path.string() + ": size does not match record count " + std::to_string(count));
  }
  std::vector<Event> events;
  events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto* r = bytes + kBinHeaderBytes + i * kBinRecordBytes;
    ++rep.lines;
    Event e;
    if (make_event(static_cast<std::int64_t>(load_le<std::uint64_t>(r)), load_le<std::uint16_t>(r + 8),
                   load_le<std::uint16_t>(r + 10), r[12], e)) {
      e.ordinal = static_cast<std::uint32_t>(events.size());
      events.push_back(e);
    } else {
      ++rep.malformed;
    }
  }
  check_malformed(path, rep);
  return events;
}

}  // namespace

EventStream read_events(const std::filesystem::path& path, CameraId camera, ReadReport* report) {
  ReadReport local;
  ReadReport& rep = report ? *report : local;
  const std::string data = slurp(path);
  auto events = format_for(path) == EventFormat::Bin ? parse_bin(path, data, rep) : parse_csv(path, data, rep);
  if (events.empty()) rep.warnings.push_back(path.string() + ": no events");
  if (rep.malformed > 0) rep.warnings.push_back(path.string() + ": " + std::to_string(rep.malformed) + " malformed records skipped");
  return EventStream(camera, std::move(events));
}

void write_events(const EventStream& stream, const std::filesystem::path& path, EventFormat format) {
  std::string out;
  const auto events = stream.events();
  if (format == EventFormat::Csv) {
    out.reserve(24 * events.size() + 32);
    out += kCsvHeader;
    out += '\n';
    char buf[64];
    for (const auto& e : events) {
      const int n = std::snprintf(buf, sizeof buf, "%lld,%u,%u,%u\n", static_cast<long long>(e.t_us), unsigned(e.u),
                                  unsigned(e.v), unsigned(e.polarity == Polarity::On));
      out.append(buf, static_cast<std::size_t>(n));
    }
  } else {
    out.reserve(kBinHeaderBytes + kBinRecordBytes * events.size());
    out.append(kMagic, 4);
    out.push_back(static_cast<char>(kBinVersion));
    out.push_back(static_cast<char>(index_of(stream.camera())));
    out.append(2, '\0');
    store_le<std::uint64_t>(out, events.size());
    for (const auto& e : events) {
      store_le<std::int64_t>(out, e.t_us);
      store_le<std::uint16_t>(out, e.u);
      store_le<std::uint16_t>(out, e.v);
      out.push_back(static_cast<char>(e.polarity == Polarity::On));
      out.append(3, '\0');
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write event file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Synchronization

std::vector<TapCandidate> tap_candidates(const EventStream& stream, const SyncSpec& spec) {
  spec.validate();
  std::vector<TapCandidate> out;
  if (stream.empty()) return out;
  const auto bin_us = bin_width_us(spec.bin_s);
  const auto start = stream.aligned_time(0);
  const auto n_bins = static_cast<std::size_t>(seconds_to_us(spec.search_window_s) / bin_us);
  if (n_bins == 0) return out;
  const auto [lo, hi] = stream.index_range(start, start + static_cast<std::int64_t>(n_bins) * bin_us);
  std::vector<std::int64_t> times(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) times[i - lo] = stream.aligned_time(i);
  const auto counts = bin_counts(times, start, bin_us, n_bins);

  std::vector<std::int64_t> sorted = counts;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = static_cast<double>(sorted[sorted.size() / 2]);
  const double threshold = spec.threshold_factor * std::max(median, 1.0);
  const double foot = spec.foot_factor * std::max(median, 1.0);

  // Peak regions: runs of above-threshold bins, merged across gaps under 100 ms.
  const auto merge_gap = static_cast<std::size_t>(std::max<std::int64_t>(1, 100000 / bin_us));
  std::size_t i = 0;
  std::size_t prev_end = 0;
  while (i < n_bins) {
    if (static_cast<double>(counts[i]) <= threshold) {
      ++i;
      continue;
    }
    std::size_t first = i;
    while (first > prev_end && static_cast<double>(counts[first - 1]) > foot) --first;
    std::int64_t peak = counts[i];
    std::size_t last_above = i;
    for (std::size_t j = i + 1; j < n_bins && j - last_above <= merge_gap; ++j) {
      if (static_cast<double>(counts[j]) > threshold) {
        last_above = j;
        peak = std::max(peak, counts[j]);
      }
    }
    out.push_back({us_to_seconds(start + static_cast<std::int64_t>(first) * bin_us),
                   static_cast<double>(peak) / us_to_seconds(bin_us)});
    i = last_above + 1;
    prev_end = i;
  }
  return out;
}

std::vector<double> detect_sync_taps(const EventStream& stream, const SyncSpec& spec) {
  const auto cands = tap_candidates(stream, spec);
  const auto n = cands.size();
  const auto k = static_cast<std::size_t>(spec.n_taps);

  // Best chain of k candidates with consecutive spacing within tolerance of
  // the tap interval, scored by summed peak rate.
  std::vector<std::size_t> best_chain;
  double best_score = -1.0;
  std::vector<std::size_t> chain;
  auto extend = [&](auto&& self, std::size_t last, double score) -> void {
    if (chain.size() == k) {
      if (score > best_score) {
        best_score = score;
        best_chain = chain;
      }
      return;
    }
    for (std::size_t j = last + 1; j < n; ++j) {
      const double gap = cands[j].onset_s - cands[last].onset_s;
      if (gap > spec.tap_interval_s + spec.spacing_tolerance_s) break;
      if (std::abs(gap - spec.tap_interval_s) > spec.spacing_tolerance_s) continue;
      chain.push_back(j);
      self(self, j, score + cands[j].peak_rate);
      chain.pop_back();
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    chain.assign(1, i);
    extend(extend, i, cands[i].peak_rate);
  }

  if (best_chain.empty()) {
    std::ostringstream msg;
    msg << "sync failure on " << to_string(stream.camera()) << ": no " << k << " peaks spaced "
        << spec.tap_interval_s << " s apart; candidates:";
    if (cands.empty()) msg << " none";
    for (const auto& c : cands) msg << " (" << c.onset_s << " s, " << c.peak_rate << " ev/s)";
    throw SyncError(msg.str());
  }
  std::vector<double> onsets;
  for (auto idx : best_chain) onsets.push_back(cands[idx].onset_s);
  return onsets;
}

AlignedPair align_streams(const EventStream& cam1, const EventStream& cam2, const SyncSpec& spec) {
  const auto taps1 = detect_sync_taps(cam1, spec);
  const auto taps2 = detect_sync_taps(cam2, spec);
  const double mean1 = std::accumulate(taps1.begin(), taps1.end(), 0.0) / double(taps1.size());
  const double mean2 = std::accumulate(taps2.begin(), taps2.end(), 0.0) / double(taps2.size());
  const std::int64_t delta = seconds_to_us(mean1 - mean2);

  AlignedPair out{cam1, cam2.with_time_offset(cam2.time_offset_us() + delta), taps1, {}, delta};
  for (double t : taps2) out.taps_cam2_s.push_back(t + us_to_seconds(delta));
  for (std::size_t i = 0; i < taps1.size(); ++i) {
    if (std::abs(out.taps_cam1_s[i] - out.taps_cam2_s[i]) >= 0.05) {
      throw SyncError("sync failure: tap " + std::to_string(i) + " differs by more than 50 ms after alignment");
    }
  }
  return out;
}

}  // namespace optoskin
