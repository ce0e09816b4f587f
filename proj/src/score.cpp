#include "anthem/score.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <tuple>

namespace anthem::score {
namespace {

template <typename Visitor>
void for_each_absolute(const smf::TrackChunk& track, Visitor&& visit) {
  std::uint64_t tick = 0;
  for (const auto& ev : track.events) {
    tick += ev.delta_ticks;
    visit(tick, ev.body);
  }
}

template <typename Tick>
double seconds_at(const TempoMap& map, Tick tick) {
  const double division = map.division;
  double seconds = 0.0;
  for (std::size_t i = 0; i < map.segments.size(); ++i) {
    const double start = static_cast<double>(map.segments[i].start_tick);
    if (static_cast<double>(tick) <= start) break;
    const double next = i + 1 < map.segments.size() ? static_cast<double>(map.segments[i + 1].start_tick)
                                                    : static_cast<double>(tick);
    const double stop = std::min(next, static_cast<double>(tick));
    seconds += (stop - start) / division * (map.segments[i].us_per_quarter / 1.0e6);
  }
  return seconds;
}

}  // namespace

TempoMap build_tempo_map(const smf::SmfFile& file) {
  struct Change {
    std::uint64_t tick;
    std::uint32_t us;
  };
  std::vector<Change> changes;
  for (const auto& track : file.tracks) {
    for_each_absolute(track, [&](std::uint64_t tick, const smf::EventBody& body) {
      if (const auto* t = std::get_if<smf::TempoMeta>(&body)) changes.push_back({tick, t->us_per_quarter});
    });
  }
  std::stable_sort(changes.begin(), changes.end(),
                   [](const Change& a, const Change& b) { return a.tick < b.tick; });

  TempoMap map;
  map.division = file.division;
  map.segments.clear();
  if (changes.empty() || changes.front().tick > 0) map.segments.push_back(TempoSegment{0, kDefaultTempo});
  for (const auto& c : changes) {
    if (!map.segments.empty() && map.segments.back().start_tick == c.tick) {
      map.segments.back().us_per_quarter = c.us;  // last wins
    } else {
      map.segments.push_back(TempoSegment{c.tick, c.us});
    }
  }
  return map;
}

double ticks_to_seconds(const TempoMap& map, std::uint64_t tick) { return seconds_at(map, tick); }

double fractional_ticks_to_seconds(const TempoMap& map, double tick) { return seconds_at(map, tick); }

std::vector<Note> extract_notes(const smf::SmfFile& file, std::vector<std::string>& repairs) {
  const TempoMap map = build_tempo_map(file);
  std::vector<Note> notes;
  std::size_t unclosed = 0;
  std::size_t zero_length = 0;
  std::size_t unmatched_off = 0;

  auto emit = [&](std::uint8_t channel, std::uint8_t pitch, std::uint8_t velocity, std::uint64_t on,
                  std::uint64_t off) {
    if (off <= on) {
      ++zero_length;
      return;
    }
    Note n;
    n.channel = channel;
    n.pitch = pitch;
    n.velocity = velocity;
    n.onset_tick = on;
    n.offset_tick = off;
    n.onset_beats = static_cast<double>(on) / file.division;
    n.duration_beats = static_cast<double>(off - on) / file.division;
    n.onset_seconds = ticks_to_seconds(map, on);
    n.duration_seconds = ticks_to_seconds(map, off) - n.onset_seconds;
    notes.push_back(n);
  };

  struct Open {
    std::uint64_t tick;
    std::uint8_t velocity;
  };
  for (const auto& track : file.tracks) {
    std::map<std::pair<std::uint8_t, std::uint8_t>, std::deque<Open>> open;
    std::uint64_t end_tick = 0;
    for_each_absolute(track, [&](std::uint64_t tick, const smf::EventBody& body) {
      end_tick = tick;
      std::uint8_t channel = 0;
      std::uint8_t pitch = 0;
      bool closes = false;
      if (const auto* on = std::get_if<smf::NoteOn>(&body)) {
        channel = on->channel;
        pitch = on->pitch;
        if (on->velocity > 0) {
          open[{channel, pitch}].push_back({tick, on->velocity});
          return;
        }
        closes = true;
      } else if (const auto* off = std::get_if<smf::NoteOff>(&body)) {
        channel = off->channel;
        pitch = off->pitch;
        closes = true;
      }
      if (!closes) return;
      auto& queue = open[{channel, pitch}];
      if (queue.empty()) {
        ++unmatched_off;
        return;
      }
      const Open first = queue.front();
      queue.pop_front();
      emit(channel, pitch, first.velocity, first.tick, tick);
    });
    for (auto& [key, queue] : open) {
      for (const auto& o : queue) {
        ++unclosed;
        emit(key.first, key.second, o.velocity, o.tick, end_tick);
      }
    }
  }

  if (unclosed) repairs.push_back(std::to_string(unclosed) + " unclosed notes closed at end of track");
  if (zero_length) repairs.push_back(std::to_string(zero_length) + " zero-length notes dropped");
  if (unmatched_off) repairs.push_back(std::to_string(unmatched_off) + " unmatched note-offs ignored");

  std::sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
    return std::tie(a.onset_tick, a.pitch, a.channel, a.offset_tick, a.velocity) <
           std::tie(b.onset_tick, b.pitch, b.channel, b.offset_tick, b.velocity);
  });
  return notes;
}

std::vector<Note> extract_notes(const smf::SmfFile& file) {
  std::vector<std::string> repairs;
  return extract_notes(file, repairs);
}

std::vector<double> build_beat_grid(double span_beats, const TempoMap& map) {
  const auto count = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(std::max(0.0, span_beats))));
  std::vector<double> grid;
  grid.reserve(count);
  for (std::uint64_t beat = 0; beat < count; ++beat) grid.push_back(ticks_to_seconds(map, beat * map.division));
  return grid;
}

std::vector<Interval> merged_sounding_intervals(const std::vector<Note>& notes) {
  std::vector<Interval> raw;
  raw.reserve(notes.size());
  for (const auto& n : notes) {
    if (!n.is_percussion()) raw.push_back({n.onset_beats, n.offset_beats()});
  }
  std::sort(raw.begin(), raw.end(),
            [](const Interval& a, const Interval& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
  std::vector<Interval> merged;
  for (const auto& iv : raw) {
    if (!merged.empty() && iv.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, iv.end);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

std::vector<TimeSignature> collect_time_signatures(const smf::SmfFile& file) {
  std::vector<TimeSignature> sigs;
  for (const auto& track : file.tracks) {
    for_each_absolute(track, [&](std::uint64_t tick, const smf::EventBody& body) {
      if (const auto* ts = std::get_if<smf::TimeSignatureMeta>(&body)) {
        sigs.push_back({tick, ts->numerator, ts->denominator()});
      }
    });
  }
  std::stable_sort(sigs.begin(), sigs.end(),
                   [](const TimeSignature& a, const TimeSignature& b) { return a.tick < b.tick; });
  return sigs;
}

Performance build_performance(const smf::SmfFile& file) {
  Performance perf;
  perf.tempo_map = build_tempo_map(file);
  auto all = extract_notes(file, perf.repairs);
  for (auto& n : all) {
    if (n.is_percussion()) {
      ++perf.percussion_notes_dropped;
    } else {
      perf.notes.push_back(n);
    }
  }
  if (perf.percussion_notes_dropped) {
    perf.repairs.push_back(std::to_string(perf.percussion_notes_dropped) + " percussion notes excluded");
  }
  perf.time_signatures = collect_time_signatures(file);

  if (!perf.notes.empty()) {
    std::uint64_t first = perf.notes.front().onset_tick;
    std::uint64_t last = 0;
    for (const auto& n : perf.notes) last = std::max(last, n.offset_tick);
    perf.span.first_onset_beats = static_cast<double>(first) / file.division;
    perf.span.last_offset_beats = static_cast<double>(last) / file.division;
    perf.span.first_onset_seconds = ticks_to_seconds(perf.tempo_map, first);
    perf.span.last_offset_seconds = ticks_to_seconds(perf.tempo_map, last);
  }
  perf.beat_grid = build_beat_grid(perf.span.last_offset_beats, perf.tempo_map);
  return perf;
}

}  // namespace anthem::score
