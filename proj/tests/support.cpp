#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "anthem/error.hpp"
#include "anthem/features.hpp"

#ifndef ANTHEM_SOURCE_DIR
#define ANTHEM_SOURCE_DIR "."
#endif

namespace anthem::testing {

Bytes bytes(std::initializer_list<int> values) {
  Bytes out;
  for (int v : values) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

Bytes concat(std::initializer_list<Bytes> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Bytes be32(std::uint32_t v) {
  return bytes({static_cast<int>(v >> 24), static_cast<int>((v >> 16) & 0xFF), static_cast<int>((v >> 8) & 0xFF),
                static_cast<int>(v & 0xFF)});
}

Bytes chunk(const char* id, const Bytes& body) {
  Bytes out(id, id + 4);
  const auto len = be32(static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), len.begin(), len.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Bytes header(int format, int ntracks, int division) {
  return chunk("MThd", bytes({0, format, 0, ntracks, division >> 8, division & 0xFF}));
}

Bytes minimal_fixture() {
  return concat({header(0, 1, 480), chunk("MTrk", bytes({
                                                  0x00, 0x90, 0x3C, 0x5A,        // on 60 v90
                                                  0x83, 0x60, 0x80, 0x3C, 0x00,  // +480 off 60
                                                  0x00, 0xFF, 0x2F, 0x00,        // end of track
                                              }))});
}

Bytes minimal_fixture_note_on_zero() {
  return concat({header(0, 1, 480), chunk("MTrk", bytes({
                                                  0x00, 0x90, 0x3C, 0x5A,
                                                  0x83, 0x60, 0x90, 0x3C, 0x00,
                                                  0x00, 0xFF, 0x2F, 0x00,
                                              }))});
}

Bytes minimal_fixture_running_status() {
  return concat({header(0, 1, 480), chunk("MTrk", bytes({
                                                  0x00, 0x90, 0x3C, 0x5A,
                                                  0x83, 0x60, 0x3C, 0x00,  // status omitted
                                                  0x00, 0xFF, 0x2F, 0x00,
                                              }))});
}

Bytes multitrack_fixture() {
  const Bytes conductor = bytes({
      0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20,        // tempo 500000
      0x00, 0xFF, 0x58, 0x04, 0x03, 0x02, 0x18, 0x08,  // 3/4
      0x00, 0xFF, 0x01, 0x03, 'a', 'b', 'c',           // text
      0x81, 0x40, 0xFF, 0x51, 0x03, 0x0F, 0x42, 0x40,  // +192 tempo 1000000
      0x00, 0xFF, 0x2F, 0x00,
  });
  const Bytes notes = bytes({
      0x00, 0xC0, 0x05,                    // program change
      0x00, 0x90, 0x3C, 0x64,              // on 60 v100
      0x00, 0x40, 0x50,                    // running: on 64 v80
      0x60, 0x80, 0x3C, 0x40,              // +96 off 60 v64
      0x00, 0x40, 0x00,                    // running: off 64
      0x00, 0xB0, 0x07, 0x64,              // controller
      0x00, 0xF0, 0x03, 0x43, 0x12, 0xF7,  // sysex
      0x30, 0x99, 0x24, 0x7F,              // +48 drum on
      0x30, 0x89, 0x24, 0x00,              // +48 drum off
      0x00, 0xFF, 0x2F, 0x00,
  });
  return concat({header(1, 2, 96), chunk("MTrk", conductor), chunk("XFIH", bytes({1, 2, 3})), chunk("MTrk", notes)});
}

Bytes missing_eot_fixture() {
  return concat({header(0, 1, 480), chunk("MTrk", bytes({0x00, 0x90, 0x3C, 0x40, 0x83, 0x60, 0x80, 0x3C, 0x00}))});
}

std::vector<NamedFixture> all_fixtures() {
  using namespace smf;
  const std::vector<TimedEvent> minimal{{0, NoteOn{0, 60, 90}}, {480, NoteOff{0, 60, 0}}, {0, EndOfTrack{}}};
  const std::vector<TimedEvent> on_zero{{0, NoteOn{0, 60, 90}}, {480, NoteOn{0, 60, 0}}, {0, EndOfTrack{}}};
  const std::vector<TimedEvent> conductor{
      {0, TempoMeta{500000}},
      {0, TimeSignatureMeta{3, 2, 24, 8}},
      {0, OtherEvent{bytes({0xFF, 0x01, 0x03, 'a', 'b', 'c'})}},
      {192, TempoMeta{1000000}},
      {0, EndOfTrack{}},
  };
  const std::vector<TimedEvent> notes{
      {0, OtherEvent{bytes({0xC0, 0x05})}},
      {0, NoteOn{0, 60, 100}},
      {0, NoteOn{0, 64, 80}},
      {96, NoteOff{0, 60, 64}},
      {0, NoteOff{0, 64, 0}},
      {0, OtherEvent{bytes({0xB0, 0x07, 0x64})}},
      {0, OtherEvent{bytes({0xF0, 0x03, 0x43, 0x12, 0xF7})}},
      {48, NoteOn{9, 36, 127}},
      {48, NoteOff{9, 36, 0}},
      {0, EndOfTrack{}},
  };
  const std::vector<TimedEvent> repaired{{0, NoteOn{0, 60, 64}}, {480, NoteOff{0, 60, 0}}, {0, EndOfTrack{}}};
  return {{"minimal", minimal_fixture(), {minimal}},
          {"minimal_note_on_zero", minimal_fixture_note_on_zero(), {on_zero}},
          {"minimal_running_status", minimal_fixture_running_status(), {on_zero}},
          {"multitrack", multitrack_fixture(), {conductor, notes}},
          {"missing_eot", missing_eot_fixture(), {repaired}}};
}

std::string source_path(const std::string& relative) { return std::string(ANTHEM_SOURCE_DIR) + "/" + relative; }

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

namespace {

std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

}  // namespace

double naive_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return naive_pearson(counting_ranks(x), counting_ranks(y));
}

double brute_force_ari(const std::vector<int>& a, const std::vector<int>& b) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      if (sa && sb) ++n11;
      else if (sa) ++n10;
      else if (sb) ++n01;
      else ++n00;
    }
  }
  const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (den == 0) return 1.0;
  return 2.0 * (n00 * n11 - n01 * n10) / den;
}

double brute_force_silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& labels) {
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < points[i].size(); ++d) s += (points[i][d] - points[j][d]) * (points[i][d] - points[j][d]);
    return std::sqrt(s);
  };
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  double total = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(labels[j])] += dist(i, j);
      ++count[static_cast<std::size_t>(labels[j])];
    }
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count[own] == 0) continue;  // singleton: s = 0
    const double a = sum[own] / count[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / count[c]);
    }
    const double m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / static_cast<double>(points.size());
}

synth::SongSpec random_song(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  static const int divisions[] = {96, 120, 384, 480, 960};

  synth::SongSpec s;
  s.division = divisions[uniform(0, 4)];
  const int groups = uniform(2, 24);
  double t = 0.25 * uniform(0, 8);
  std::vector<double> onsets;
  for (int g = 0; g < groups; ++g) {
    const double dur = 0.25 * uniform(1, 8);
    const int size = uniform(1, 3);
    std::vector<int> pitches;
    while (static_cast<int>(pitches.size()) < size) {
      const int p = uniform(36, 96);
      if (std::find(pitches.begin(), pitches.end(), p) == pitches.end()) pitches.push_back(p);
    }
    for (int p : pitches) s.notes.push_back({uniform(0, 3), p, uniform(1, 127), t, dur});
    onsets.push_back(t);
    t += dur + 0.25 * uniform(0, 4) * uniform(0, 1);
  }
  s.tempos.push_back({0.0, static_cast<double>(uniform(40, 200))});
  for (int i = uniform(0, 2); i > 0; --i) s.tempos.push_back({onsets[static_cast<std::size_t>(uniform(0, groups - 1))], static_cast<double>(uniform(40, 200))});
  static const int numerators[] = {2, 3, 4, 6};
  for (int i = uniform(0, 3); i > 0; --i) {
    s.meters.push_back({onsets[static_cast<std::size_t>(uniform(0, groups - 1))], numerators[uniform(0, 3)], 4});
  }
  std::stable_sort(s.meters.begin(), s.meters.end(), [](const auto& a, const auto& b) { return a.beat < b.beat; });
  return s;
}

score::Performance performance_of(const synth::SongSpec& song) {
  return score::build_performance(smf::parse_smf(synth::build_smf_bytes(song)));
}

namespace {

bool same_beat_features(const features::FeatureVector& a, const features::FeatureVector& b) {
  return a.beat_onset_density == b.beat_onset_density && a.note_duration_mean == b.note_duration_mean &&
         a.rest_duration_median == b.rest_duration_median && a.velocity_median == b.velocity_median &&
         a.time_signature_changes == b.time_signature_changes;
}

std::string describe(const char* what, std::uint64_t seed) {
  std::ostringstream os;
  os << what << " (song seed " << seed << ")";
  return os.str();
}

void fail(PropertyReport& r, const std::string& why) {
  if (r.failures++ == 0) r.detail = why;
}

}  // namespace

PropertyReport check_transposition(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const std::uint64_t song_seed = rng();
    auto song = random_song(song_seed);
    int lo = 127, hi = 0;
    for (const auto& n : song.notes) {
      lo = std::min(lo, n.pitch);
      hi = std::max(hi, n.pitch);
    }
    const int k = std::uniform_int_distribution<int>(-lo, 127 - hi)(rng);
    auto moved = song;
    for (auto& n : moved.notes) n.pitch += k;
    const auto a = features::extract_feature_vector(performance_of(song), "x");
    const auto b = features::extract_feature_vector(performance_of(moved), "x");
    if (a.melodic_contour_mean != b.melodic_contour_mean) fail(r, describe("contour changed under transposition", song_seed));
    else if (b.pitch_mode != a.pitch_mode + k) fail(r, describe("pitch mode not shifted by k", song_seed));
    else if (!same_beat_features(a, b) || a.tempo_bpm != b.tempo_bpm) fail(r, describe("other features changed", song_seed));
  }
  return r;
}

PropertyReport check_tempo_rescaling(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const std::uint64_t song_seed = rng();
    auto song = random_song(song_seed);
    const double factor = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    auto scaled = song;
    for (auto& t : scaled.tempos) t.bpm *= factor;
    const auto a = features::extract_feature_vector(performance_of(song), "x");
    const auto b = features::extract_feature_vector(performance_of(scaled), "x");
    if (!same_beat_features(a, b) || a.melodic_contour_mean != b.melodic_contour_mean || a.pitch_mode != b.pitch_mode) {
      fail(r, describe("beat-unit feature changed under tempo rescaling", song_seed));
    } else if (std::abs(b.tempo_bpm / a.tempo_bpm - factor) > 1e-4 * factor) {
      fail(r, describe("tempo did not scale with the tempo map", song_seed));
    }
  }
  return r;
}

PropertyReport check_melody_reversal(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const std::uint64_t song_seed = rng();
    auto song = random_song(song_seed);
    double end = 0;
    for (const auto& n : song.notes) end = std::max(end, n.onset_beats + n.duration_beats);
    auto reversed = song;
    for (auto& n : reversed.notes) n.onset_beats = end - (n.onset_beats + n.duration_beats);
    const auto pa = performance_of(song);
    const auto pb = performance_of(reversed);
    const double a = features::melodic_contour_mean(pa);
    const double b = features::melodic_contour_mean(pb);
    auto line = features::top_voice(pa);
    std::reverse(line.begin(), line.end());
    if (b != -a) fail(r, describe("reversed melody did not negate contour", song_seed));
    else if (features::top_voice(pb) != line) fail(r, describe("reversed top voice differs", song_seed));
    else if (features::contour_of(line) != -a) fail(r, describe("contour_of(reversed) != -contour", song_seed));
  }
  return r;
}

PropertyReport check_permutation(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c, ++r.cases) {
    const std::uint64_t song_seed = rng();
    auto song = random_song(song_seed);
    auto shuffled = song;
    std::shuffle(shuffled.notes.begin(), shuffled.notes.end(), rng);
    for (auto& n : shuffled.notes) {
      const int ch = std::uniform_int_distribution<int>(0, 14)(rng);
      n.channel = ch >= 9 ? ch + 1 : ch;  // never percussion
    }
    const auto pa = performance_of(song);
    const auto pb = performance_of(shuffled);
    auto notes = pa.notes;
    std::shuffle(notes.begin(), notes.end(), rng);
    auto pc = pa;
    pc.notes = notes;
    const double v = features::velocity_median(pa);
    const double rest = features::rest_duration_median(pa);
    if (features::velocity_median(pb) != v || features::velocity_median(pc) != v) {
      fail(r, describe("velocity median depends on input order", song_seed));
    } else if (features::rest_duration_median(pb) != rest || features::rest_duration_median(pc) != rest) {
      fail(r, describe("rest median depends on input order", song_seed));
    }
  }
  return r;
}

PropertyReport check_vlq_round_trip(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> any(0, smf::kMaxVlq);
  static const std::uint32_t edges[] = {0, 1, 127, 128, 16383, 16384, 2097151, 2097152, smf::kMaxVlq};
  for (int c = 0; c < cases; ++c, ++r.cases) {
    std::uint32_t value;
    switch (c % 4) {
      case 0: value = edges[static_cast<std::size_t>(c / 4) % std::size(edges)]; break;
      case 1: value = any(rng) >> std::uniform_int_distribution<int>(0, 27)(rng); break;
      default: value = any(rng);
    }
    Bytes buf(static_cast<std::size_t>(c % 5), 0xAA);
    const auto offset = buf.size();
    smf::write_vlq(value, buf);
    const std::size_t expected = value < (1u << 7) ? 1 : value < (1u << 14) ? 2 : value < (1u << 21) ? 3 : 4;
    try {
      const auto got = smf::read_vlq(buf, offset);
      if (got.value != value || got.consumed != expected || buf.size() - offset != expected) {
        fail(r, "round trip failed for " + std::to_string(value));
      }
    } catch (const Error& e) {
      fail(r, "read_vlq threw on " + std::to_string(value) + ": " + e.what());
    }
  }
  return r;
}

PropertyReport check_parser_fuzz(int cases, std::uint64_t seed) {
  PropertyReport r;
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const auto seeds = all_fixtures();
  for (int c = 0; c < cases; ++c, ++r.cases) {
    Bytes input;
    switch (c % 3) {
      case 0: {  // noise
        input.resize(static_cast<std::size_t>(uniform(0, 96)));
        for (auto& b : input) b = static_cast<std::uint8_t>(uniform(0, 255));
        break;
      }
      case 1: {  // valid header, noise body
        input = header(uniform(0, 2), uniform(0, 3), uniform(1, 960));
        Bytes body(static_cast<std::size_t>(uniform(0, 64)));
        for (auto& b : body) b = static_cast<std::uint8_t>(uniform(0, 255));
        const auto trk = chunk("MTrk", body);
        input.insert(input.end(), trk.begin(), trk.end());
        break;
      }
      default: {  // mutated fixture
        input = seeds[static_cast<std::size_t>(uniform(0, static_cast<int>(seeds.size()) - 1))].data;
        for (int m = uniform(1, 4); m > 0 && !input.empty(); --m) {
          const auto at = static_cast<std::size_t>(uniform(0, static_cast<int>(input.size()) - 1));
          switch (uniform(0, 2)) {
            case 0: input[at] = static_cast<std::uint8_t>(uniform(0, 255)); break;
            case 1: input.erase(input.begin() + static_cast<std::ptrdiff_t>(at)); break;
            default: input.resize(at); break;
          }
        }
      }
    }
    try {
      const auto file = smf::parse_smf(input);
      if (file.bytes_consumed + file.trailing_bytes != input.size()) fail(r, "byte accounting mismatch on case " + std::to_string(c));
      (void)score::build_performance(file);
    } catch (const Error&) {
      // structured rejection
    } catch (const std::exception& e) {
      fail(r, std::string("unstructured exception: ") + e.what());
    }
  }
  return r;
}

PlantedBlobs planted_blobs(std::uint64_t seed, int per_blob, int dims) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  PlantedBlobs out;
  for (int blob = 0; blob < 3; ++blob) {
    for (int i = 0; i < per_blob; ++i) {
      std::vector<double> p(static_cast<std::size_t>(dims));
      for (int d = 0; d < dims; ++d) p[static_cast<std::size_t>(d)] = noise(rng);
      // Equilateral triangle with side 20 in the first two dimensions.
      p[0] += blob == 1 ? 20.0 : blob == 2 ? 10.0 : 0.0;
      if (dims > 1) p[1] += blob == 2 ? 10.0 * std::sqrt(3.0) : 0.0;
      out.points.push_back(std::move(p));
      out.labels.push_back(blob);
    }
  }
  return out;
}

}  // namespace anthem::testing
