#pragma once

// Shared fixtures, brute-force oracles and property checks for the unit tests
// and the acceptance binary.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "anthem/score.hpp"
#include "anthem/smf.hpp"
#include "anthem/synth.hpp"

namespace anthem::testing {

using Bytes = std::vector<std::uint8_t>;

Bytes bytes(std::initializer_list<int> values);
Bytes concat(std::initializer_list<Bytes> parts);
Bytes be32(std::uint32_t v);
Bytes chunk(const char* id, const Bytes& body);
Bytes header(int format, int ntracks, int division);

// Hand-assembled files. Each comment lists the decoded events.

/// Format 0, division 480: NoteOn(0,60,90)@0, NoteOff(0,60,0)@480, EOT.
Bytes minimal_fixture();
/// Same notes, second event written as NoteOn(0,60,0) with an explicit status.
Bytes minimal_fixture_note_on_zero();
/// The previous file with the second status byte omitted (running status).
Bytes minimal_fixture_running_status();
/// Format 1, division 96, conductor + one note track, text/sysex/controller
/// events, an unknown chunk between the tracks.
Bytes multitrack_fixture();
/// Format 0 track with no End-of-Track.
Bytes missing_eot_fixture();

struct NamedFixture {
  std::string name;
  Bytes data;
  std::vector<std::vector<smf::TimedEvent>> tracks;  // hand-decoded
};
std::vector<NamedFixture> all_fixtures();

std::string source_path(const std::string& relative);

// Oracles written independently of the library.

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y);
double naive_spearman(const std::vector<double>& x, const std::vector<double>& y);
/// Pair counting over every unordered pair of items.
double brute_force_ari(const std::vector<int>& a, const std::vector<int>& b);
double brute_force_silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels);

// Property checks. Each returns the number of failing cases and fills
// `detail` with the first failure.

struct PropertyReport {
  int cases = 0;
  int failures = 0;
  std::string detail;
};

/// Random monophonic-or-chordal song with non-overlapping onset groups.
synth::SongSpec random_song(std::uint64_t seed);

score::Performance performance_of(const synth::SongSpec& song);

PropertyReport check_transposition(int cases, std::uint64_t seed);
PropertyReport check_tempo_rescaling(int cases, std::uint64_t seed);
PropertyReport check_melody_reversal(int cases, std::uint64_t seed);
PropertyReport check_permutation(int cases, std::uint64_t seed);

PropertyReport check_vlq_round_trip(int cases, std::uint64_t seed);
PropertyReport check_parser_fuzz(int cases, std::uint64_t seed);

/// Three blobs with centers 20 sds apart; labels are the planted blob ids.
struct PlantedBlobs {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};
PlantedBlobs planted_blobs(std::uint64_t seed, int per_blob = 20, int dims = 2);

}  // namespace anthem::testing
