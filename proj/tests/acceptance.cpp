// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failing criteria, not counting a failure marked `known` whose observed
// value has itself been pinned down exactly.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "anthem/analysis.hpp"
#include "anthem/error.hpp"
#include "anthem/features.hpp"
#include "anthem/pipeline.hpp"
#include "anthem/synth.hpp"
#include "anthem/text.hpp"
#include "support.hpp"

namespace {

namespace fs = std::filesystem;
using namespace anthem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  bool known = false;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail.str("");
      detail << why;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("anthem_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

void smf_parser(Outcome& o) {
  const auto t0 = Clock::now();
  for (const auto& f : testing::all_fixtures()) {
    const auto file = smf::parse_smf(f.data);
    bool same = file.tracks.size() == f.tracks.size();
    for (std::size_t t = 0; same && t < f.tracks.size(); ++t) same = file.tracks[t].events == f.tracks[t];
    o.require(same, "fixture " + f.name + " decoded differently");
    o.require(smf::parse_smf(smf::serialize_smf(file)) == file, "fixture " + f.name + " does not round-trip");
  }
  const auto vlq = testing::check_vlq_round_trip(100000, 20240501);
  o.require(vlq.failures == 0, "VLQ: " + vlq.detail);
  const auto fuzz = testing::check_parser_fuzz(10000, 20240502);
  o.require(fuzz.failures == 0, "fuzz: " + fuzz.detail);
  const double s = seconds_since(t0);
  o.require(s < 5.0, "took " + std::to_string(s) + " s");
  if (o.pass) o.detail << testing::all_fixtures().size() << " fixtures, " << vlq.cases << " VLQ values, " << fuzz.cases
                       << " fuzz inputs in " << s << " s";
}

void feature_golden(Outcome& o) {
  const auto golden = nlohmann::json::parse(text::read_text_file(testing::source_path("tests/golden/anthem_A.json")));
  const auto bytes = smf::read_file_bytes(testing::source_path(golden.at("fixture").get<std::string>()));
  const auto v = features::extract_feature_vector(score::build_performance(smf::parse_smf(bytes)), "anthem a");
  const auto& g = golden.at("features");
  const auto values = v.values();
  for (std::size_t i = 0; i < features::kFeatureNames.size(); ++i) {
    const std::string name(features::kFeatureNames[i]);
    const double expected = g.at(name).get<double>();
    const bool integer = name == "pitch_mode" || name == "time_signature_changes";
    o.require(integer ? values[i] == expected : std::abs(values[i] - expected) <= 1e-9,
              name + " = " + text::format_double(values[i]) + ", golden " + text::format_double(expected));
  }
  if (o.pass) o.detail << "8/8 features match anthem_A";
}

void feature_invariants(Outcome& o) {
  const std::pair<const char*, std::function<testing::PropertyReport()>> checks[] = {
      {"transposition", [] { return testing::check_transposition(1000, 101); }},
      {"tempo rescaling", [] { return testing::check_tempo_rescaling(1000, 102); }},
      {"melody reversal", [] { return testing::check_melody_reversal(1000, 103); }},
      {"permutation", [] { return testing::check_permutation(1000, 104); }},
  };
  int total = 0;
  for (const auto& [name, run] : checks) {
    const auto r = run();
    total += r.cases;
    o.require(r.cases >= 1000 && r.failures == 0, std::string(name) + ": " + r.detail);
  }
  if (o.pass) o.detail << "4 properties, " << total << " cases";
}

void clustering(Outcome& o) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto blobs = testing::planted_blobs(seed * 7919);
    const auto z = analysis::standardize(to_matrix(blobs.points));
    const auto sel = analysis::select_k(z, 8, seed);
    o.require(sel.k == 3, "seed " + std::to_string(seed) + ": k = " + std::to_string(sel.k));
    const double ari = analysis::adjusted_rand_index(sel.model.assignments, blobs.labels);
    o.require(ari == 1.0, "seed " + std::to_string(seed) + ": ARI = " + text::format_double(ari));
    for (int k = 1; k <= 8; ++k) {
      const auto m = analysis::kmeans_fit(z, k, seed);
      for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
        o.require(m.inertia_history[i] <= m.inertia_history[i - 1] * (1 + 1e-12),
                  "inertia rose at seed " + std::to_string(seed) + " k " + std::to_string(k));
      }
    }
  }
  if (o.pass) o.detail << "20 seeds: k = 3, ARI = 1";
}

void statistics(Outcome& o) {
  Eigen::VectorXd x(3), y(3), s(3);
  x << 1, 2, 3;
  y << 2, 4, 7;
  s << 10, 20, 15;
  const double p = analysis::pearson(x, y);
  o.require(std::abs(p - 0.99340) <= 1e-5, "pearson " + text::format_double(p));
  o.require(std::abs(p - testing::naive_pearson({1, 2, 3}, {2, 4, 7})) < 1e-12, "pearson disagrees with oracle");
  const double r = analysis::spearman(x, s);
  o.require(r == 0.5, "spearman " + text::format_double(r));
  o.require(testing::naive_spearman({1, 2, 3}, {10, 20, 15}) == 0.5, "spearman oracle");

  const double ari = analysis::adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1});
  o.require(ari == -0.5, "ARI " + text::format_double(ari));
  o.require(testing::brute_force_ari({0, 0, 1, 1}, {0, 1, 0, 1}) == -0.5, "ARI oracle");

  Eigen::MatrixXd pts(4, 1);
  pts << 0, 0.2, 10, 10.2;
  const std::vector<int> labels{0, 0, 1, 1};
  const double sil = analysis::silhouette_score(pts, labels);
  o.require(std::abs(sil - testing::brute_force_silhouette({{0}, {0.2}, {10}, {10.2}}, labels)) < 1e-12,
            "silhouette disagrees with oracle");
  if (o.pass && std::abs(sil - 0.9802) > 1e-4) {
    // The target assumes b = 10.1 for every point; the inner points have
    // b = 9.9, so the exact mean is (2 - 0.2/10.1 - 0.2/9.9) / 2.
    const double exact = (2 - 0.2 / 10.1 - 0.2 / 9.9) / 2;
    o.pass = false;
    o.known = std::abs(sil - exact) < 1e-12;
    o.detail << "silhouette " << sil << " vs target 0.9802 +- 1e-4"
             << (o.known ? " (target miscomputed; exact value confirmed by brute force)" : "")
             << "; pearson " << p << ", spearman " << r << ", ARI " << ari << " pass";
    return;
  }
  o.require(std::abs(sil - 0.9802) <= 1e-4, "silhouette " + text::format_double(sil));
  if (o.pass) o.detail << "pearson " << p << ", spearman " << r << ", silhouette " << sil << ", ARI " << ari;
}

void end_to_end(Outcome& o) {
  const auto t0 = Clock::now();
  const auto dir = scratch("e2e");
  synth::write_demo_corpus((dir / "demo").string());
  auto config = pipeline::load_config((dir / "demo" / "run.json").string());
  config.output_dir = (dir / "out").string();
  const auto first = pipeline::run_pipeline(config);
  const auto first_bytes = text::read_text_file((dir / "out" / "run_manifest.json").string());
  const auto second = pipeline::run_pipeline(config);
  const auto second_bytes = text::read_text_file((dir / "out" / "run_manifest.json").string());

  const auto manifest = nlohmann::json::parse(first.json);
  const int admitted = manifest["counts"]["admitted"].get<int>();
  o.require(admitted >= 6, "only " + std::to_string(admitted) + " anthems admitted");
  o.require(first_bytes == second_bytes && first.json == second.json, "manifests differ between runs");

  const auto corr = nlohmann::json::parse(text::read_text_file((dir / "out" / "correlations.json").string()));
  const auto& idx = corr["indices"];
  const auto& feats = corr["features"];
  const auto vi = static_cast<std::size_t>(std::find(idx.begin(), idx.end(), "vitality") - idx.begin());
  const auto ti = static_cast<std::size_t>(std::find(feats.begin(), feats.end(), "tempo_bpm") - feats.begin());
  const double rho = corr["spearman"][ti][vi].is_number() ? corr["spearman"][ti][vi].get<double>() : -2.0;
  o.require(rho >= 0.9, "Spearman(tempo, vitality) = " + text::format_double(rho));
  const double s = seconds_since(t0);
  o.require(s < 10.0, "took " + std::to_string(s) + " s");
  fs::remove_all(dir);
  if (o.pass) o.detail << admitted << " anthems, Spearman(tempo, vitality) = " << rho << ", identical manifests, " << s << " s";
}

void scale(Outcome& o) {
  const auto dir = scratch("scale");
  synth::write_scale_corpus((dir / "corpus").string(), 166, 166);
  auto config = pipeline::load_config((dir / "corpus" / "run.json").string());
  config.output_dir = (dir / "out").string();
  const auto t0 = Clock::now();
  const auto result = pipeline::run_pipeline(config);
  const double s = seconds_since(t0);
  const auto manifest = nlohmann::json::parse(result.json);
  const int admitted = manifest["counts"]["admitted"].get<int>();
  o.require(admitted == 166, std::to_string(admitted) + " of 166 admitted");
  o.require(s < 60.0, "took " + std::to_string(s) + " s");
  fs::remove_all(dir);
  if (o.pass) o.detail << "166 anthems in " << s << " s";
}

void qualitative(Outcome& o) {
  // Twenty countries; tempo z is 0.8 +- 0.6 in the high-score half and
  // -0.8 +- 0.6 in the low half (population sd exactly 1).
  indices::IndexJoin v;
  v.index_name = "planted";
  const int n = 20;
  v.features = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(features::kFeatureCount));
  v.scores.resize(n);
  for (int i = 0; i < n; ++i) {
    v.countries.push_back("country " + std::to_string(100 + i));
    v.scores(i) = 3.0 * i;
    const double side = i < n / 2 ? -0.8 : 0.8;
    v.features(i, 3) = 110 + 12 * (side + (i % 2 ? 0.6 : -0.6));
    v.features(i, 0) = (i * 37) % 11;
  }
  const auto table = analysis::qualitative_labels(v);
  const auto& tempo = table.rows[3];
  o.require(std::abs(tempo.high_group_z - 0.8) < 1e-9, "high-group tempo z = " + text::format_double(tempo.high_group_z));
  o.require(tempo.high == analysis::Label::kHigh, "tempo labeled " + std::string(analysis::to_string(tempo.high)));
  if (o.pass) o.detail << "tempo z = " << tempo.high_group_z << " labeled " << analysis::to_string(tempo.high);
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)(Outcome&)> criteria[] = {
      {"smf-parser: fixtures, 1e5 VLQ round trips, 1e4 fuzz inputs, < 5 s", smf_parser},
      {"feature-golden: anthem_A matches hand-computed values", feature_golden},
      {"feature-invariants: >= 1e3 randomized cases per property", feature_invariants},
      {"clustering: planted 3 blobs give k = 3 and ARI = 1 for 20 seeds", clustering},
      {"statistics-oracles: pearson, spearman, silhouette, ARI", statistics},
      {"end-to-end: Spearman(tempo, index) >= 0.9, identical manifests, < 10 s", end_to_end},
      {"scale: 166-file corpus through the full pipeline < 60 s", scale},
      {"qualitative: planted z = +0.8 shift labeled High", qualitative},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail.str("");
      o.detail << "exception: " << e.what();
    }
    std::cout << (o.pass ? "PASS " : o.known ? "FAIL (known) " : "FAIL ") << name << " -- " << o.detail.str() << std::endl;
    if (!o.pass && !o.known) ++failures;
  }
  return failures;
}
