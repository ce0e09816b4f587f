#pragma once

// Standard MIDI File (SMF 1.0) decoding.
//
// The parser is lossless for the events the analysis needs (notes, tempo,
// time signature, end of track). Everything else is kept as opaque bytes so a
// parsed file can be written back out and reparsed to the same structure.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace anthem::smf {

enum class Format : std::uint16_t { kSingleTrack = 0, kMultiTrack = 1, kSequential = 2 };

struct NoteOn {
  std::uint8_t channel = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 0;
  bool operator==(const NoteOn&) const = default;
};

struct NoteOff {
  std::uint8_t channel = 0;
  std::uint8_t pitch = 0;
  std::uint8_t velocity = 0;
  bool operator==(const NoteOff&) const = default;
};

struct TempoMeta {
  std::uint32_t us_per_quarter = 500000;
  bool operator==(const TempoMeta&) const = default;
};

struct TimeSignatureMeta {
  std::uint8_t numerator = 4;
  std::uint8_t denominator_power = 2;  // denominator = 2^power
  std::uint8_t clocks_per_click = 24;
  std::uint8_t thirty_seconds_per_quarter = 8;

  int denominator() const { return 1 << denominator_power; }
  bool operator==(const TimeSignatureMeta&) const = default;
};

struct EndOfTrack {
  bool operator==(const EndOfTrack&) const = default;
};

/// Any other event, stored exactly as it would be written with an explicit
/// status byte: channel messages as status + data, meta as FF type vlq(len)
/// data, sysex as F0/F7 vlq(len) data.
struct OtherEvent {
  std::vector<std::uint8_t> bytes;
  bool operator==(const OtherEvent&) const = default;
};

using EventBody = std::variant<NoteOn, NoteOff, TempoMeta, TimeSignatureMeta, EndOfTrack, OtherEvent>;

struct TimedEvent {
  std::uint32_t delta_ticks = 0;
  EventBody body;
  bool operator==(const TimedEvent&) const = default;
};

struct TrackChunk {
  std::vector<TimedEvent> events;
  /// Set when the chunk ended without an End-of-Track meta and one was appended.
  bool repaired = false;

  bool operator==(const TrackChunk& other) const { return events == other.events; }
};

struct SmfFile {
  Format format = Format::kSingleTrack;
  std::uint16_t division = 480;  // ticks per quarter note
  std::vector<TrackChunk> tracks;

  // Diagnostics; not part of structural equality.
  std::vector<std::string> warnings;
  std::size_t bytes_consumed = 0;  // header + every chunk, including skipped ones
  std::size_t trailing_bytes = 0;  // ignored bytes after the final declared track

  bool operator==(const SmfFile& other) const {
    return format == other.format && division == other.division && tracks == other.tracks;
  }
};

struct VlqResult {
  std::uint32_t value = 0;
  std::size_t consumed = 0;
};

inline constexpr std::uint32_t kMaxVlq = 0x0FFFFFFF;

/// Decodes a variable-length quantity starting at `offset`. Throws ParseError
/// on truncation or on a fifth continuation byte.
VlqResult read_vlq(std::span<const std::uint8_t> bytes, std::size_t offset);

/// Appends the VLQ encoding of `value` (must be <= kMaxVlq).
void write_vlq(std::uint32_t value, std::vector<std::uint8_t>& out);

/// Throws ParseError (or UnsupportedFormat for SMPTE division) on input that
/// cannot be decoded. Recoverable irregularities are reported in `warnings`.
SmfFile parse_smf(std::span<const std::uint8_t> bytes);

/// Writes a format-conformant file with explicit status bytes on every event.
std::vector<std::uint8_t> serialize_smf(const SmfFile& file);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace anthem::smf
