#include "anthem/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <tuple>

#include "anthem/error.hpp"
#include "anthem/text.hpp"

namespace anthem::synth {
namespace {

namespace fs = std::filesystem;

// Portable draws: std distributions differ between standard libraries.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  int integer(int lo, int hi) { return lo + std::min(hi - lo, static_cast<int>(unit() * (hi - lo + 1))); }
  bool chance(double p) { return unit() < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 rng_;
};

std::uint32_t to_ticks(double beats, int division) {
  return static_cast<std::uint32_t>(std::llround(beats * division));
}

struct Pending {
  std::uint32_t tick;
  int order;  // note-offs (0) sort before meta (1) before note-ons (2) at one tick
  smf::EventBody body;
};

smf::TrackChunk to_track(std::vector<Pending> events, std::uint32_t end_tick) {
  std::stable_sort(events.begin(), events.end(),
                   [](const Pending& a, const Pending& b) { return std::tie(a.tick, a.order) < std::tie(b.tick, b.order); });
  smf::TrackChunk track;
  std::uint32_t now = 0;
  for (auto& e : events) {
    track.events.push_back({e.tick - now, std::move(e.body)});
    now = e.tick;
  }
  track.events.push_back({std::max(end_tick, now) - now, smf::EndOfTrack{}});
  return track;
}

std::uint8_t denominator_power(int denominator) {
  std::uint8_t p = 0;
  while ((1 << p) < denominator) ++p;
  if ((1 << p) != denominator) throw Error("time signature denominator must be a power of two");
  return p;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

nlohmann::ordered_json index_entry(const std::string& name, const std::string& path, const std::string& direction,
                                   nlohmann::ordered_json columns) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["path"] = path;
  j["direction"] = direction;
  j["columns"] = std::move(columns);
  return j;
}

}  // namespace

smf::SmfFile build_smf(const SongSpec& song) {
  smf::SmfFile file;
  file.format = smf::Format::kMultiTrack;
  file.division = static_cast<std::uint16_t>(song.division);

  std::uint32_t end_tick = 0;
  std::map<int, std::vector<Pending>> by_channel;
  for (const auto& n : song.notes) {
    const auto on = to_ticks(n.onset_beats, song.division);
    const auto off = to_ticks(n.onset_beats + n.duration_beats, song.division);
    const auto ch = static_cast<std::uint8_t>(n.channel);
    const auto pitch = static_cast<std::uint8_t>(n.pitch);
    by_channel[n.channel].push_back({on, 2, smf::NoteOn{ch, pitch, static_cast<std::uint8_t>(n.velocity)}});
    by_channel[n.channel].push_back({off, 0, smf::NoteOff{ch, pitch, 0}});
    end_tick = std::max(end_tick, off);
  }

  std::vector<Pending> conductor;
  for (const auto& m : song.meters) {
    conductor.push_back({to_ticks(m.beat, song.division), 1,
                         smf::TimeSignatureMeta{static_cast<std::uint8_t>(m.numerator), denominator_power(m.denominator),
                                                24, 8}});
  }
  for (const auto& t : song.tempos) {
    conductor.push_back({to_ticks(t.beat, song.division), 1,
                         smf::TempoMeta{static_cast<std::uint32_t>(std::llround(60.0e6 / t.bpm))}});
  }
  file.tracks.push_back(to_track(std::move(conductor), end_tick));
  for (auto& [channel, events] : by_channel) file.tracks.push_back(to_track(std::move(events), end_tick));
  return file;
}

std::vector<std::uint8_t> build_smf_bytes(const SongSpec& song) { return smf::serialize_smf(build_smf(song)); }

SongSpec anthem_a() {
  SongSpec s;
  s.division = 480;
  s.tempos = {{0, 120}, {4, 60}};
  s.meters = {{0, 4, 4}, {4, 3, 4}, {6, 3, 4}};
  s.notes = {
      // melody
      {0, 60, 80, 0.0, 1.0},
      {0, 64, 90, 1.0, 1.0},
      {0, 67, 100, 2.0, 0.5},
      {0, 65, 70, 3.0, 1.0},
      {0, 64, 90, 4.0, 1.0},
      {0, 62, 60, 6.0, 1.0},
      // bass
      {1, 48, 50, 0.0, 2.0},
      {1, 48, 50, 4.0, 1.0},
      {1, 55, 50, 6.0, 1.0},
      // kick drum, excluded from analysis
      {9, 36, 127, 0.0, 0.5},
  };
  return s;
}

SongSpec random_anthem(std::uint64_t seed, double tempo_bpm) {
  Draw draw(seed);
  SongSpec s;
  s.division = 480;
  s.tempos = {{0, tempo_bpm}};

  const int numerator = draw.chance(0.3) ? 3 : 4;
  s.meters.push_back({0, numerator, 4});

  const std::vector<double> durations{0.5, 1.0, 1.0, 1.0, 1.5, 2.0};
  const int length = draw.integer(24, 48);
  int pitch = 60 + draw.integer(-5, 7);
  double beat = 0.0;
  for (int i = 0; i < length; ++i) {
    if (i > 0 && draw.chance(0.12)) beat += draw.chance(0.5) ? 0.5 : 1.0;
    const double dur = draw.pick(durations);
    s.notes.push_back({0, pitch, draw.integer(60, 110), beat, dur});
    beat += dur;
    pitch = std::clamp(pitch + draw.integer(-4, 4), 48, 84);
  }
  const double total = beat;

  if (draw.chance(0.2)) {
    const double at = std::floor(total / 2 / numerator) * numerator;
    if (at > 0) s.meters.push_back({at, numerator == 3 ? 4 : 3, 4});
  }
  for (double b = 0.0; b + 1.0 <= total; b += 2.0) {
    if (draw.chance(0.6)) s.notes.push_back({1, draw.integer(36, 47), draw.integer(40, 80), b, 1.0});
  }
  return s;
}

CorpusLayout write_demo_corpus(const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "corpus");
  fs::create_directories(root / "indices");

  struct Anthem {
    const char* file;
    const char* display;  // spelling used in the index tables
    double tempo;
    std::uint64_t seed;
  };
  const std::vector<Anthem> anthems = {
      {"Finland.mid", "  FINLAND ", 76, 11},    {"Japan.mid", "Japan", 88, 12},
      {"USA.mid", "United States", 96, 13},     {"Brazil.mid", "Brazil", 104, 14},
      {"Kenya.mid", "Kenya", 112, 15},          {"Ivory_Coast.mid", "C\xC3\xB4te d'Ivoire", 120, 16},
      {"Norway.mid", "Norway", 126, 17},        {"Chile.mid", "Chile", 138, 18},
  };

  CorpusLayout layout;
  for (const auto& a : anthems) {
    const auto path = root / "corpus" / a.file;
    write_bytes(path, build_smf_bytes(random_anthem(a.seed, a.tempo)));
    layout.midi_files.push_back(path.string());
  }

  // Vitality rises strictly with the planted tempo; columns are out of the
  // usual order and carry an unused population column.
  std::vector<std::pair<std::string, double>> vitality;
  for (const auto& a : anthems) vitality.emplace_back(a.display, 2.0 + a.tempo / 20.0);
  vitality.emplace_back("Iceland", 5.1);
  vitality.emplace_back("Peru", 3.3);
  std::sort(vitality.begin(), vitality.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  std::string csv = text::csv_line({"Rank", "Country", "Vitality Score", "Population"});
  for (std::size_t i = 0; i < vitality.size(); ++i) {
    csv += text::csv_line({std::to_string(i + 1), vitality[i].first, text::format_double(vitality[i].second),
                           std::to_string(1000000 + 12345 * i)});
  }
  const auto vitality_path = root / "indices" / "vitality.csv";
  text::write_text_file(vitality_path.string(), csv);

  // Calm has no entry for Chile, so the global join keeps seven countries.
  const std::vector<std::pair<std::string, double>> calm = {
      {"Finland", 1.4}, {"Japan", 1.3},         {"United States of America", 2.4}, {"Brazil", 2.5},
      {"Kenya", 2.3},   {"Ivory Coast", 2.1},   {"Norway", 1.5},                   {"Mexico", 2.6}};
  csv = text::csv_line({"country", "score"});
  for (const auto& [name, score] : calm) csv += text::csv_line({name, text::format_double(score)});
  const auto calm_path = root / "indices" / "calm.csv";
  text::write_text_file(calm_path.string(), csv);
  layout.index_files = {vitality_path.string(), calm_path.string()};

  nlohmann::ordered_json config;
  config["corpus_dir"] = "corpus";
  config["seed"] = 20240501;
  config["k_max"] = 5;
  config["join_mode"] = "global_intersection";
  config["formats"] = {"csv", "json", "svg"};
  config["indices"] = {
      index_entry("vitality", "indices/vitality.csv", "higher_is_better", {{"country", 1}, {"score", 2}, {"rank", 0}}),
      index_entry("calm", "indices/calm.csv", "higher_is_worse", {{"country", "country"}, {"score", "score"}})};
  layout.config_file = (root / "run.json").string();
  text::write_text_file(layout.config_file, config.dump(2) + "\n");
  return layout;
}

CorpusLayout write_scale_corpus(const std::string& dir, int count, std::uint64_t seed) {
  const fs::path root(dir);
  fs::create_directories(root / "corpus");
  fs::create_directories(root / "indices");
  Draw draw(seed);

  CorpusLayout layout;
  std::string linked = text::csv_line({"country", "score", "rank"});
  std::string unrelated = text::csv_line({"country", "score"});
  for (int i = 1; i <= count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "country %03d", i);
    const double tempo = 60.0 + draw.unit() * 100.0;
    const auto path = root / "corpus" / (std::string(name) + ".mid");
    write_bytes(path, build_smf_bytes(random_anthem(seed * 1000003u + static_cast<std::uint64_t>(i), tempo)));
    layout.midi_files.push_back(path.string());
    linked += text::csv_line({name, text::format_double(std::log(tempo)), std::to_string(i)});
    unrelated += text::csv_line({name, text::format_double(std::round(draw.unit() * 1000.0) / 100.0)});
  }
  const auto linked_path = root / "indices" / "tempo_linked.csv";
  const auto unrelated_path = root / "indices" / "unrelated.csv";
  text::write_text_file(linked_path.string(), linked);
  text::write_text_file(unrelated_path.string(), unrelated);
  layout.index_files = {linked_path.string(), unrelated_path.string()};

  nlohmann::ordered_json config;
  config["corpus_dir"] = "corpus";
  config["seed"] = seed;
  config["k_max"] = 10;
  config["join_mode"] = "global_intersection";
  config["formats"] = {"csv", "json", "svg"};
  config["indices"] = {
      index_entry("tempo_linked", "indices/tempo_linked.csv", "higher_is_better",
                  {{"country", 0}, {"score", 1}, {"rank", 2}}),
      index_entry("unrelated", "indices/unrelated.csv", "higher_is_worse", {{"country", 0}, {"score", 1}})};
  layout.config_file = (root / "run.json").string();
  text::write_text_file(layout.config_file, config.dump(2) + "\n");
  return layout;
}

}  // namespace anthem::synth
