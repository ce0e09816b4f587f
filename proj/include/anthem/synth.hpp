#pragma once

// Deterministic synthetic anthems and index tables for fixtures, the bundled
// demo corpus and scale runs.

#include <cstdint>
#include <string>
#include <vector>

#include "anthem/smf.hpp"

namespace anthem::synth {

struct NoteSpec {
  int channel = 0;
  int pitch = 60;
  int velocity = 90;
  double onset_beats = 0.0;
  double duration_beats = 1.0;
};

struct TempoChange {
  double beat = 0.0;
  double bpm = 120.0;
};

struct MeterChange {
  double beat = 0.0;
  int numerator = 4;
  int denominator = 4;
};

struct SongSpec {
  int division = 480;
  std::vector<TempoChange> tempos;
  std::vector<MeterChange> meters;
  std::vector<NoteSpec> notes;
};

/// Format 1: a conductor track with tempo and meter events, then one track
/// per channel in ascending channel order.
smf::SmfFile build_smf(const SongSpec& song);

std::vector<std::uint8_t> build_smf_bytes(const SongSpec& song);

/// Fixed fixture with hand-derivable features (see tests/golden/anthem_A.json).
SongSpec anthem_a();

/// Random melody with a bass line at a constant planted tempo.
SongSpec random_anthem(std::uint64_t seed, double tempo_bpm);

struct CorpusLayout {
  std::vector<std::string> midi_files;
  std::vector<std::string> index_files;
  std::string config_file;
};

/// Eight anthems, two index CSVs (one a strictly increasing function of the
/// planted tempo) and a run config, written into `dir`.
CorpusLayout write_demo_corpus(const std::string& dir);

/// `count` anthems named "country NNN" with random tempos, plus two indices.
CorpusLayout write_scale_corpus(const std::string& dir, int count, std::uint64_t seed);

}  // namespace anthem::synth
