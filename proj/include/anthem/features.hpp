#pragma once

// Eight-scalar musical summary of one anthem.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "anthem/score.hpp"

namespace anthem::features {

inline constexpr std::size_t kFeatureCount = 8;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "melodic_contour_mean", "pitch_mode",         "beat_onset_density",   "tempo_bpm",
    "velocity_median",      "note_duration_mean", "rest_duration_median", "time_signature_changes"};

/// Human-readable row labels for report tables.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureLabels = {
    "Melodic Contour", "Pitch",         "Beat",          "Tempo",
    "Note Velocity",   "Note Duration", "Rest Duration", "Time Signature Changes"};

struct FeatureVector {
  std::string country;
  double melodic_contour_mean = 0.0;  // semitones per step
  int pitch_mode = 0;
  double beat_onset_density = 0.0;  // onsets per beat
  double tempo_bpm = 120.0;
  double velocity_median = 0.0;
  double note_duration_mean = 0.0;    // beats
  double rest_duration_median = 0.0;  // beats
  int time_signature_changes = 0;

  /// Values in kFeatureNames order.
  std::array<double, kFeatureCount> values() const;

  bool operator==(const FeatureVector&) const = default;
};

double melodic_contour_mean(const score::Performance& perf);

/// Contour of an explicit melody line (consecutive pitches).
double contour_of(const std::vector<int>& melody);

/// Highest pitch at each distinct onset tick.
std::vector<int> top_voice(const score::Performance& perf);

int pitch_mode(const score::Performance& perf);

/// Distinct onset ticks per beat of sounding span; span floored at one beat.
/// Throws DegeneratePerformance when there is nothing to measure.
double beat_onset_density(const score::Performance& perf);

/// Tempo averaged over the note span, weighted by seconds.
double estimate_tempo(const score::Performance& perf);

double velocity_median(const score::Performance& perf);

double note_duration_mean(const score::Performance& perf);

/// Gaps between merged sounding intervals, in beats.
std::vector<double> rest_durations(const score::Performance& perf);

double rest_duration_median(const score::Performance& perf);

int time_signature_change_count(const std::vector<score::TimeSignature>& signatures);
int time_signature_change_count(const score::Performance& perf);

FeatureVector extract_feature_vector(const score::Performance& perf, std::string country);

/// Median; even-length input averages the two middle values. Empty input returns 0.
double median(std::vector<double> values);

// Feature store: one row per admitted anthem.

std::string feature_csv_header();
std::string write_feature_csv(const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> read_feature_csv(std::string_view text);
std::string write_feature_json(const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> read_feature_json(std::string_view text);

}  // namespace anthem::features
