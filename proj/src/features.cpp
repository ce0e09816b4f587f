#include "anthem/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "anthem/error.hpp"
#include "anthem/text.hpp"

namespace anthem::features {

std::array<double, kFeatureCount> FeatureVector::values() const {
  return {melodic_contour_mean, static_cast<double>(pitch_mode),  beat_onset_density,   tempo_bpm,
          velocity_median,      note_duration_mean,               rest_duration_median, static_cast<double>(time_signature_changes)};
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return (values[mid - 1] + values[mid]) / 2.0;
}

std::vector<int> top_voice(const score::Performance& perf) {
  std::vector<int> melody;
  std::uint64_t current = 0;
  for (const auto& n : perf.notes) {
    if (melody.empty() || n.onset_tick != current) {
      melody.push_back(n.pitch);
      current = n.onset_tick;
    } else {
      melody.back() = std::max<int>(melody.back(), n.pitch);
    }
  }
  return melody;
}

double contour_of(const std::vector<int>& melody) {
  if (melody.size() < 2) return 0.0;
  long long total = 0;
  for (std::size_t i = 1; i < melody.size(); ++i) total += melody[i] - melody[i - 1];
  return static_cast<double>(total) / static_cast<double>(melody.size() - 1);
}

double melodic_contour_mean(const score::Performance& perf) { return contour_of(top_voice(perf)); }

int pitch_mode(const score::Performance& perf) {
  std::array<std::size_t, 128> counts{};
  for (const auto& n : perf.notes) ++counts[n.pitch & 0x7F];
  // max_element returns the first maximum, i.e. the lowest pitch on ties.
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double beat_onset_density(const score::Performance& perf) {
  if (perf.notes.empty() || !(perf.span.beats() > 0.0)) {
    throw DegeneratePerformance("degenerate performance: no sounding span");
  }
  std::set<std::uint64_t> onsets;
  for (const auto& n : perf.notes) onsets.insert(n.onset_tick);
  return static_cast<double>(onsets.size()) / std::max(perf.span.beats(), 1.0);
}

double estimate_tempo(const score::Performance& perf) {
  const auto& segments = perf.tempo_map.segments;
  if (perf.notes.empty()) return segments.front().bpm();

  const std::uint64_t first = perf.notes.front().onset_tick;
  std::uint64_t last = first;
  for (const auto& n : perf.notes) last = std::max(last, n.offset_tick);

  double weighted = 0.0;
  double total = 0.0;
  std::size_t active = 0;
  std::size_t only = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::uint64_t seg_start = segments[i].start_tick;
    const std::uint64_t seg_end = i + 1 < segments.size() ? segments[i + 1].start_tick : last;
    const std::uint64_t lo = std::max(seg_start, first);
    const std::uint64_t hi = std::min(seg_end, last);
    if (hi <= lo) continue;
    const double seconds =
        static_cast<double>(hi - lo) / perf.tempo_map.division * (segments[i].us_per_quarter / 1.0e6);
    weighted += segments[i].bpm() * seconds;
    total += seconds;
    ++active;
    only = i;
  }
  if (active == 1) return segments[only].bpm();
  if (active == 0 || total <= 0.0) {
    // Span lies inside one segment boundary; use the tempo in effect at the first onset.
    std::size_t at = 0;
    while (at + 1 < segments.size() && segments[at + 1].start_tick <= first) ++at;
    return segments[at].bpm();
  }
  return weighted / total;
}

double velocity_median(const score::Performance& perf) {
  std::vector<double> v;
  v.reserve(perf.notes.size());
  for (const auto& n : perf.notes) v.push_back(n.velocity);
  return median(std::move(v));
}

double note_duration_mean(const score::Performance& perf) {
  if (perf.notes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& n : perf.notes) sum += n.duration_beats;
  return sum / static_cast<double>(perf.notes.size());
}

std::vector<double> rest_durations(const score::Performance& perf) {
  const auto merged = score::merged_sounding_intervals(perf.notes);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < merged.size(); ++i) gaps.push_back(merged[i].start - merged[i - 1].end);
  return gaps;
}

double rest_duration_median(const score::Performance& perf) { return median(rest_durations(perf)); }

int time_signature_change_count(const std::vector<score::TimeSignature>& signatures) {
  int changes = 0;
  for (std::size_t i = 1; i < signatures.size(); ++i) {
    if (signatures[i].numerator != signatures[i - 1].numerator ||
        signatures[i].denominator != signatures[i - 1].denominator) {
      ++changes;
    }
  }
  return changes;
}

int time_signature_change_count(const score::Performance& perf) {
  return time_signature_change_count(perf.time_signatures);
}

FeatureVector extract_feature_vector(const score::Performance& perf, std::string country) {
  if (perf.notes.empty()) throw DegeneratePerformance("degenerate performance: no notes");
  FeatureVector fv;
  fv.country = std::move(country);
  fv.melodic_contour_mean = melodic_contour_mean(perf);
  fv.pitch_mode = pitch_mode(perf);
  fv.beat_onset_density = beat_onset_density(perf);
  fv.tempo_bpm = estimate_tempo(perf);
  fv.velocity_median = velocity_median(perf);
  fv.note_duration_mean = note_duration_mean(perf);
  fv.rest_duration_median = rest_duration_median(perf);
  fv.time_signature_changes = time_signature_change_count(perf);
  return fv;
}

std::string feature_csv_header() {
  std::vector<std::string> cols{"country"};
  for (auto name : kFeatureNames) cols.emplace_back(name);
  return text::csv_line(cols);
}

std::string write_feature_csv(const std::vector<FeatureVector>& rows) {
  std::string out = feature_csv_header();
  for (const auto& r : rows) {
    out += text::csv_line({r.country, text::format_double(r.melodic_contour_mean), std::to_string(r.pitch_mode),
                           text::format_double(r.beat_onset_density), text::format_double(r.tempo_bpm),
                           text::format_double(r.velocity_median), text::format_double(r.note_duration_mean),
                           text::format_double(r.rest_duration_median), std::to_string(r.time_signature_changes)});
  }
  return out;
}

std::vector<FeatureVector> read_feature_csv(std::string_view csv) {
  const auto rows = text::parse_csv(csv);
  if (rows.empty() || text::csv_line(rows.front()) != feature_csv_header()) {
    throw DataError("feature store: unexpected header");
  }
  std::vector<FeatureVector> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "feature store row " + std::to_string(r + 1);
    if (row.size() != kFeatureCount + 1) throw DataError(where + ": expected 9 fields");
    std::array<double, kFeatureCount> v{};
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const auto parsed = text::parse_double(row[c + 1]);
      if (!parsed) throw DataError(where + ": unparseable " + std::string(kFeatureNames[c]));
      v[c] = *parsed;
    }
    FeatureVector fv;
    fv.country = row[0];
    fv.melodic_contour_mean = v[0];
    fv.pitch_mode = static_cast<int>(v[1]);
    fv.beat_onset_density = v[2];
    fv.tempo_bpm = v[3];
    fv.velocity_median = v[4];
    fv.note_duration_mean = v[5];
    fv.rest_duration_median = v[6];
    fv.time_signature_changes = static_cast<int>(v[7]);
    out.push_back(std::move(fv));
  }
  return out;
}

std::string write_feature_json(const std::vector<FeatureVector>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json obj;
    obj["country"] = r.country;
    obj["melodic_contour_mean"] = r.melodic_contour_mean;
    obj["pitch_mode"] = r.pitch_mode;
    obj["beat_onset_density"] = r.beat_onset_density;
    obj["tempo_bpm"] = r.tempo_bpm;
    obj["velocity_median"] = r.velocity_median;
    obj["note_duration_mean"] = r.note_duration_mean;
    obj["rest_duration_median"] = r.rest_duration_median;
    obj["time_signature_changes"] = r.time_signature_changes;
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

std::vector<FeatureVector> read_feature_json(std::string_view json_text) {
  std::vector<FeatureVector> out;
  try {
    const auto arr = nlohmann::json::parse(json_text);
    for (const auto& obj : arr) {
      FeatureVector fv;
      fv.country = obj.at("country").get<std::string>();
      fv.melodic_contour_mean = obj.at("melodic_contour_mean").get<double>();
      fv.pitch_mode = obj.at("pitch_mode").get<int>();
      fv.beat_onset_density = obj.at("beat_onset_density").get<double>();
      fv.tempo_bpm = obj.at("tempo_bpm").get<double>();
      fv.velocity_median = obj.at("velocity_median").get<double>();
      fv.note_duration_mean = obj.at("note_duration_mean").get<double>();
      fv.rest_duration_median = obj.at("rest_duration_median").get<double>();
      fv.time_signature_changes = obj.at("time_signature_changes").get<int>();
      out.push_back(std::move(fv));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feature store JSON: ") + e.what());
  }
  return out;
}

}  // namespace anthem::features
