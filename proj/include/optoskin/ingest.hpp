#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "optoskin/events.hpp"

namespace optoskin {

struct SyncSpec {
  int n_taps{3};
  double tap_interval_s{1.0};
  double post_pause_s{3.0};
  double search_window_s{15.0};
  double bin_s{0.01};
  double threshold_factor{5.0};   // a peak region needs bins above this multiple of the window's median
  double foot_factor{2.0};        // onset walks back over preceding bins above this multiple
  double spacing_tolerance_s{0.25};

  void validate() const;
};

struct ScheduledPress {
  double onset_s{0.0};  // relative to the first synchronization tap
  Point2 ground_truth;
  int press_index{0};   // grid position
  int repetition{0};
};

struct PressSchedule {
  double press_duration_s{0.55};
  std::vector<ScheduledPress> presses;

  /// Every grid point of `layout`, `layout.repetitions` times, `period_s`
  /// apart; the first press follows the last tap by the sync post-pause.
  static PressSchedule regular(const SensorLayout& layout, const SyncSpec& sync, double period_s = 3.7);

  /// Throws ConfigError unless onsets increase and press windows do not overlap.
  void validate() const;
};

enum class EventFormat { Csv, Bin };

struct ReadReport {
  std::size_t lines{0};
  std::size_t malformed{0};
  std::vector<std::string> warnings;
};

/// Format is chosen from the extension (.bin -> binary, otherwise CSV).
/// Throws IoError when unreadable and FormatError when more than 1% of lines
/// are malformed.
EventStream read_events(const std::filesystem::path& path, CameraId camera, ReadReport* report = nullptr);
void write_events(const EventStream& stream, const std::filesystem::path& path, EventFormat format);
EventFormat format_for(const std::filesystem::path& path);

inline constexpr std::size_t kBinHeaderBytes = 16;
inline constexpr std::size_t kBinRecordBytes = 16;
inline constexpr std::uint8_t kBinVersion = 1;

struct TapCandidate {
  double onset_s{0.0};
  double peak_rate{0.0};
};

/// Onsets (aligned stream time, seconds, ascending) of the synchronization
/// taps. Throws SyncError listing the candidates when no n_taps peaks with the
/// expected spacing exist in the search window.
std::vector<double> detect_sync_taps(const EventStream& stream, const SyncSpec& spec);

/// All above-threshold peak regions in the search window.
std::vector<TapCandidate> tap_candidates(const EventStream& stream, const SyncSpec& spec);

struct AlignedPair {
  EventStream cam1;
  EventStream cam2;
  std::vector<double> taps_cam1_s;  // in the common (cam1) time base
  std::vector<double> taps_cam2_s;  // after alignment
  std::int64_t offset_us{0};        // added to cam2
  /// Common time origin: the first cam1 tap.
  std::int64_t origin_us() const { return seconds_to_us(taps_cam1_s.front()); }
};

/// Shifts cam2 so the mean of its tap onsets equals cam1's.
AlignedPair align_streams(const EventStream& cam1, const EventStream& cam2, const SyncSpec& spec);

}  // namespace optoskin
