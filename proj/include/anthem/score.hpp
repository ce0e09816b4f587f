#pragma once

// Timed musical view of a parsed MIDI file: paired notes, tempo map, beat grid.

#include <cstdint>
#include <string>
#include <vector>

#include "anthem/smf.hpp"

namespace anthem::score {

inline constexpr std::uint32_t kDefaultTempo = 500000;  // µs per quarter, 120 BPM
inline constexpr std::uint8_t kPercussionChannel = 9;

struct TempoSegment {
  std::uint64_t start_tick = 0;
  std::uint32_t us_per_quarter = kDefaultTempo;

  double bpm() const { return 60.0e6 / us_per_quarter; }
  bool operator==(const TempoSegment&) const = default;
};

/// Piecewise-constant tempo over ticks. The first segment always starts at 0.
struct TempoMap {
  std::vector<TempoSegment> segments{TempoSegment{}};
  std::uint16_t division = 480;
};

struct Note {
  std::uint8_t channel = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 1;
  std::uint64_t onset_tick = 0;
  std::uint64_t offset_tick = 0;
  double onset_beats = 0.0;
  double duration_beats = 0.0;
  double onset_seconds = 0.0;
  double duration_seconds = 0.0;

  bool is_percussion() const { return channel == kPercussionChannel; }
  double offset_beats() const { return onset_beats + duration_beats; }
};

struct TimeSignature {
  std::uint64_t tick = 0;
  int numerator = 4;
  int denominator = 4;
};

struct Span {
  double first_onset_beats = 0.0;
  double last_offset_beats = 0.0;
  double first_onset_seconds = 0.0;
  double last_offset_seconds = 0.0;

  double beats() const { return last_offset_beats - first_onset_beats; }
  double seconds() const { return last_offset_seconds - first_onset_seconds; }
};

struct Interval {
  double start = 0.0;
  double end = 0.0;
  bool operator==(const Interval&) const = default;
};

struct Performance {
  std::vector<Note> notes;  // sorted by (onset_tick, pitch); percussion excluded
  TempoMap tempo_map;
  std::vector<TimeSignature> time_signatures;  // file order within tick
  std::vector<double> beat_grid;               // seconds
  Span span;
  std::vector<std::string> repairs;
  std::size_t percussion_notes_dropped = 0;
};

TempoMap build_tempo_map(const smf::SmfFile& file);

double ticks_to_seconds(const TempoMap& map, std::uint64_t tick);

/// Same conversion for fractional tick positions.
double fractional_ticks_to_seconds(const TempoMap& map, double tick);

/// Pairs note-on/note-off per (track, channel, pitch) in FIFO order. Returns
/// all notes, including percussion; repairs are appended to `repairs`.
std::vector<Note> extract_notes(const smf::SmfFile& file, std::vector<std::string>& repairs);
std::vector<Note> extract_notes(const smf::SmfFile& file);

/// One grid point per quarter note from beat 0 up to ceil(span_beats) (exclusive),
/// always at least one point.
std::vector<double> build_beat_grid(double span_beats, const TempoMap& map);

/// Union of non-percussion note intervals in beats, merging overlap and contact.
std::vector<Interval> merged_sounding_intervals(const std::vector<Note>& notes);

std::vector<TimeSignature> collect_time_signatures(const smf::SmfFile& file);

Performance build_performance(const smf::SmfFile& file);

}  // namespace anthem::score
