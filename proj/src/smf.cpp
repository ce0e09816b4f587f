#include "anthem/smf.hpp"

#include <fstream>
#include <iterator>

#include "anthem/error.hpp"

namespace anthem::smf {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t pos) {
  return (std::uint32_t{b[pos]} << 24) | (std::uint32_t{b[pos + 1]} << 16) |
         (std::uint32_t{b[pos + 2]} << 8) | std::uint32_t{b[pos + 3]};
}

std::uint16_t read_be16(std::span<const std::uint8_t> b, std::size_t pos) {
  return static_cast<std::uint16_t>((b[pos] << 8) | b[pos + 1]);
}

bool has_id(std::span<const std::uint8_t> b, std::size_t pos, const char* id) {
  return b[pos] == id[0] && b[pos + 1] == id[1] && b[pos + 2] == id[2] && b[pos + 3] == id[3];
}

void write_be32(std::uint32_t v, std::vector<std::uint8_t>& out) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void write_be16(std::uint16_t v, std::vector<std::uint8_t>& out) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

// Decodes one MTrk body occupying [begin, end).
TrackChunk parse_track(std::span<const std::uint8_t> bytes, std::size_t begin, std::size_t end,
                       std::size_t track_index, std::vector<std::string>& warnings) {
  const auto chunk = bytes.first(end);
  const std::string where = "track " + std::to_string(track_index);
  TrackChunk track;
  std::size_t pos = begin;
  std::uint8_t running = 0;
  bool saw_end = false;

  while (pos < end) {
    const auto delta = read_vlq(chunk, pos);
    pos += delta.consumed;
    if (pos >= end) throw ParseError(where + ": truncated event after delta-time", pos);

    const std::size_t event_start = pos;
    const std::uint8_t lead = chunk[pos];
    TimedEvent event{delta.value, EndOfTrack{}};

    if (lead == 0xFF) {
      if (pos + 1 >= end) throw ParseError(where + ": truncated meta event", pos);
      const std::uint8_t type = chunk[pos + 1];
      const auto len = read_vlq(chunk, pos + 2);
      const std::size_t data = pos + 2 + len.consumed;
      if (len.value > end - data) throw ParseError(where + ": meta event runs past chunk end", pos);
      pos = data + len.value;
      const auto payload = chunk.subspan(data, len.value);

      if (type == 0x2F) {
        if (len.value != 0) warnings.push_back(where + ": end-of-track meta with non-empty payload");
        track.events.push_back(event);
        saw_end = true;
        if (pos != end) {
          warnings.push_back(where + ": " + std::to_string(end - pos) +
                             " bytes after end-of-track ignored");
        }
        break;
      }
      if (type == 0x51 && len.value == 3) {
        const std::uint32_t us = (std::uint32_t{payload[0]} << 16) | (std::uint32_t{payload[1]} << 8) |
                                 std::uint32_t{payload[2]};
        if (us >= 1) {
          event.body = TempoMeta{us};
          track.events.push_back(event);
          continue;
        }
        warnings.push_back(where + ": zero tempo kept as opaque event");
      } else if (type == 0x51) {
        warnings.push_back(where + ": tempo meta with length " + std::to_string(len.value) +
                           " kept as opaque event");
      }
      if (type == 0x58 && len.value == 4) {
        if (payload[0] >= 1 && payload[1] <= 7) {
          event.body = TimeSignatureMeta{payload[0], payload[1], payload[2], payload[3]};
          track.events.push_back(event);
          continue;
        }
        warnings.push_back(where + ": invalid time signature kept as opaque event");
      } else if (type == 0x58) {
        warnings.push_back(where + ": time signature meta with length " + std::to_string(len.value) +
                           " kept as opaque event");
      }
      event.body = OtherEvent{{chunk.begin() + event_start, chunk.begin() + pos}};
      track.events.push_back(std::move(event));
      continue;
    }

    if (lead == 0xF0 || lead == 0xF7) {
      const auto len = read_vlq(chunk, pos + 1 < end ? pos + 1 : end);
      const std::size_t data = pos + 1 + len.consumed;
      if (len.value > end - data) throw ParseError(where + ": sysex event runs past chunk end", pos);
      pos = data + len.value;
      event.body = OtherEvent{{chunk.begin() + event_start, chunk.begin() + pos}};
      track.events.push_back(std::move(event));
      continue;
    }

    if (lead > 0xF0) throw ParseError(where + ": unexpected system status byte", pos);

    std::uint8_t status = 0;
    if (lead & 0x80) {
      status = lead;
      running = lead;
      ++pos;
    } else {
      if (running == 0) throw ParseError(where + ": data byte with no running status", pos);
      status = running;
    }

    const std::uint8_t kind = status >> 4;
    const std::size_t data_len = (kind == 0xC || kind == 0xD) ? 1 : 2;
    if (data_len > end - pos) throw ParseError(where + ": truncated channel message", pos);
    for (std::size_t i = 0; i < data_len; ++i) {
      if (chunk[pos + i] & 0x80) throw ParseError(where + ": status byte inside channel message data", pos + i);
    }
    const std::uint8_t channel = status & 0x0F;
    if (kind == 0x9) {
      event.body = NoteOn{channel, chunk[pos], chunk[pos + 1]};
    } else if (kind == 0x8) {
      event.body = NoteOff{channel, chunk[pos], chunk[pos + 1]};
    } else {
      OtherEvent other;
      other.bytes.push_back(status);
      other.bytes.insert(other.bytes.end(), chunk.begin() + pos, chunk.begin() + pos + data_len);
      event.body = std::move(other);
    }
    pos += data_len;
    track.events.push_back(std::move(event));
  }

  if (!saw_end) {
    track.events.push_back(TimedEvent{0, EndOfTrack{}});
    track.repaired = true;
    warnings.push_back(where + ": missing end-of-track appended");
  }
  return track;
}

}  // namespace

VlqResult read_vlq(std::span<const std::uint8_t> bytes, std::size_t offset) {
  VlqResult result;
  for (std::size_t i = 0; i < 4; ++i) {
    if (offset + i >= bytes.size()) throw ParseError("truncated variable-length quantity", offset + i);
    const std::uint8_t b = bytes[offset + i];
    result.value = (result.value << 7) | (b & 0x7F);
    if ((b & 0x80) == 0) {
      result.consumed = i + 1;
      return result;
    }
  }
  throw ParseError("variable-length quantity longer than 4 bytes", offset);
}

void write_vlq(std::uint32_t value, std::vector<std::uint8_t>& out) {
  if (value > kMaxVlq) throw Error("value exceeds variable-length quantity range");
  std::uint8_t groups[4];
  int n = 0;
  do {
    groups[n++] = static_cast<std::uint8_t>(value & 0x7F);
    value >>= 7;
  } while (value != 0);
  while (n > 1) out.push_back(static_cast<std::uint8_t>(groups[--n] | 0x80));
  out.push_back(groups[0]);
}

SmfFile parse_smf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !has_id(bytes, 0, "MThd")) throw ParseError("not an SMF file", 0);
  if (bytes.size() < 8) throw ParseError("truncated header chunk", bytes.size());
  const std::uint32_t header_len = read_be32(bytes, 4);
  if (header_len < 6) throw ParseError("header chunk shorter than 6 bytes", 4);
  if (header_len > bytes.size() - 8) throw ParseError("truncated header chunk", bytes.size());

  SmfFile file;
  const std::uint16_t format = read_be16(bytes, 8);
  const std::uint16_t ntracks = read_be16(bytes, 10);
  const std::uint16_t division = read_be16(bytes, 12);
  if (format > 2) throw ParseError("unknown SMF format " + std::to_string(format), 8);
  if (division & 0x8000) throw UnsupportedFormat("SMPTE time division is not supported", 12);
  if (division == 0) throw ParseError("zero ticks-per-quarter division", 12);
  if (format == 0 && ntracks != 1) {
    throw ParseError("format 0 file declares " + std::to_string(ntracks) + " tracks", 10);
  }
  file.format = static_cast<Format>(format);
  file.division = division;
  if (header_len > 6) {
    file.warnings.push_back("header chunk length " + std::to_string(header_len) + "; extra bytes skipped");
  }

  std::size_t pos = 8 + header_len;
  while (file.tracks.size() < ntracks) {
    if (pos >= bytes.size()) {
      throw ParseError("expected " + std::to_string(ntracks) + " tracks, found " +
                           std::to_string(file.tracks.size()),
                       pos);
    }
    if (bytes.size() - pos < 8) throw ParseError("truncated chunk header", pos);
    const std::uint32_t len = read_be32(bytes, pos + 4);
    if (len > bytes.size() - pos - 8) throw ParseError("truncated chunk", pos);
    const std::size_t body = pos + 8;
    if (has_id(bytes, pos, "MTrk")) {
      file.tracks.push_back(parse_track(bytes, body, body + len, file.tracks.size(), file.warnings));
    } else {
      file.warnings.push_back("unknown chunk at byte " + std::to_string(pos) + " skipped");
    }
    pos = body + len;
  }

  file.bytes_consumed = pos;
  file.trailing_bytes = bytes.size() - pos;
  if (file.trailing_bytes > 0) {
    file.warnings.push_back(std::to_string(file.trailing_bytes) + " trailing bytes after final track ignored");
  }
  return file;
}

std::vector<std::uint8_t> serialize_smf(const SmfFile& file) {
  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  write_be32(6, out);
  write_be16(static_cast<std::uint16_t>(file.format), out);
  write_be16(static_cast<std::uint16_t>(file.tracks.size()), out);
  write_be16(file.division, out);

  for (const auto& track : file.tracks) {
    std::vector<std::uint8_t> body;
    bool ended = false;
    for (const auto& ev : track.events) {
      if (ended) break;
      write_vlq(ev.delta_ticks, body);
      std::visit(
          [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, NoteOn>) {
              body.insert(body.end(), {static_cast<std::uint8_t>(0x90 | e.channel), e.pitch, e.velocity});
            } else if constexpr (std::is_same_v<T, NoteOff>) {
              body.insert(body.end(), {static_cast<std::uint8_t>(0x80 | e.channel), e.pitch, e.velocity});
            } else if constexpr (std::is_same_v<T, TempoMeta>) {
              body.insert(body.end(), {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(e.us_per_quarter >> 16),
                                       static_cast<std::uint8_t>(e.us_per_quarter >> 8),
                                       static_cast<std::uint8_t>(e.us_per_quarter)});
            } else if constexpr (std::is_same_v<T, TimeSignatureMeta>) {
              body.insert(body.end(), {0xFF, 0x58, 0x04, e.numerator, e.denominator_power, e.clocks_per_click,
                                       e.thirty_seconds_per_quarter});
            } else if constexpr (std::is_same_v<T, EndOfTrack>) {
              body.insert(body.end(), {0xFF, 0x2F, 0x00});
              ended = true;
            } else {
              body.insert(body.end(), e.bytes.begin(), e.bytes.end());
            }
          },
          ev.body);
    }
    if (!ended) body.insert(body.end(), {0x00, 0xFF, 0x2F, 0x00});
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    write_be32(static_cast<std::uint32_t>(body.size()), out);
    out.insert(out.end(), body.begin(), body.end());
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace anthem::smf
