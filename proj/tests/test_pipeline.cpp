#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "anthem/error.hpp"
#include "anthem/pipeline.hpp"
#include "anthem/synth.hpp"
#include "anthem/text.hpp"
#include "support.hpp"

namespace anthem::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Workdir {
 public:
  explicit Workdir(const std::string& name) : path_(fs::temp_directory_path() / ("anthem_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Workdir() { fs::remove_all(path_); }
  std::string str(const std::string& sub = "") const { return (path_ / sub).string(); }

 private:
  fs::path path_;
};

RunConfig demo_config(const Workdir& w, const std::string& out = "out") {
  synth::write_demo_corpus(w.str("demo"));
  auto config = load_config(w.str("demo/run.json"));
  config.output_dir = w.str(out);
  return config;
}

TEST(Config, ParsesAndResolvesPaths) {
  const auto c = parse_config(R"({
    "corpus_dir": "corpus", "output_dir": "/tmp/x", "seed": 7, "k_max": 4,
    "join_mode": "per_index", "formats": ["csv"],
    "indices": [{"name": "h", "path": "h.csv", "direction": "higher_is_worse",
                 "columns": {"country": "Country", "score": 3, "rank": null}}]
  })", "/data/run");
  EXPECT_EQ(c.corpus_dir, "/data/run/corpus");
  EXPECT_EQ(c.output_dir, "/tmp/x");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.k_max, 4);
  EXPECT_EQ(c.join_mode, indices::JoinMode::kPerIndex);
  EXPECT_EQ(c.formats, std::set<OutputFormat>{OutputFormat::kCsv});
  ASSERT_EQ(c.index_specs.size(), 1u);
  EXPECT_EQ(c.index_specs[0].path, "/data/run/h.csv");
  EXPECT_EQ(std::get<std::string>(c.index_specs[0].country_column), "Country");
  EXPECT_EQ(std::get<std::size_t>(c.index_specs[0].score_column), 3u);
  EXPECT_FALSE(c.index_specs[0].rank_column.has_value());
  EXPECT_EQ(c.index_specs[0].direction, indices::Direction::kHigherIsWorse);
}

TEST(Config, ValidationErrors) {
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"formats": ["pdf"]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": -1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"indices": [{"name": "a", "path": "x"}, {"name": "a", "path": "y"}]})"), ConfigError);
  RunConfig c;
  EXPECT_THROW(validate_for_clustering(c), ConfigError);
  c.seed = 1;
  EXPECT_NO_THROW(validate_for_clustering(c));
  c.k_max = 2;
  EXPECT_THROW(validate_for_clustering(c), ConfigError);
  c.k_max = 21;
  EXPECT_THROW(validate_for_clustering(c), ConfigError);
}

TEST(Helpers, CountryFromFilenameAndStem) {
  EXPECT_EQ(country_from_filename("Ivory_Coast.mid"), "Ivory Coast");
  EXPECT_EQ(safe_file_stem("cote d'ivoire"), "cote_d_ivoire");
  EXPECT_EQ(safe_file_stem("..."), "unnamed");
}

TEST(Helpers, Sha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Run, DemoCorpusEndToEnd) {
  Workdir w("demo");
  const auto config = demo_config(w);
  const auto first = run_pipeline(config);
  EXPECT_EQ(first.status, RunStatus::kSuccess);

  const auto manifest = json::parse(first.json);
  EXPECT_EQ(manifest["counts"]["files_found"], 8);
  EXPECT_EQ(manifest["counts"]["admitted"], 8);
  EXPECT_EQ(manifest["counts"]["dropped"], 0);
  EXPECT_EQ(manifest["tool"], "anthem");
  EXPECT_TRUE(manifest["clusters"]["anthems"]["k"].is_number());

  const auto corr = json::parse(text::read_text_file(w.str("out/correlations.json")));
  const auto& idx = corr["indices"];
  const auto& feats = corr["features"];
  const auto vi = std::find(idx.begin(), idx.end(), "vitality") - idx.begin();
  const auto ti = std::find(feats.begin(), feats.end(), "tempo_bpm") - feats.begin();
  EXPECT_GE(corr["spearman"][ti][vi].get<double>(), 0.9);

  for (const auto& [path, digest] : first.outputs) {
    EXPECT_EQ(sha256_hex(text::read_text_file(w.str("out/" + path))), digest) << path;
    if (path.size() > 4 && path.substr(path.size() - 4) == ".svg") {
      std::ifstream in(w.str("out/" + path));
      boost::property_tree::ptree tree;
      EXPECT_NO_THROW(boost::property_tree::read_xml(in, tree)) << path;
    }
  }

  const auto second = run_pipeline(config);
  EXPECT_EQ(second.json, first.json);
  EXPECT_EQ(text::read_text_file(w.str("out/run_manifest.json")), first.json);
}

TEST(Run, CorruptFileGivesPartialStatus) {
  Workdir w("corrupt");
  const auto config = demo_config(w);
  text::write_text_file(w.str("demo/corpus/Atlantis.mid"), "RIFF....garbage");
  text::write_text_file(w.str("demo/corpus/Empty_Land.mid"), "");
  text::write_text_file(w.str("demo/corpus/notes.txt"), "not a corpus file");
  const auto result = run_pipeline(config);
  EXPECT_EQ(result.status, RunStatus::kPartial);
  const auto manifest = json::parse(result.json);
  EXPECT_EQ(manifest["counts"]["files_found"], 10);
  EXPECT_EQ(manifest["counts"]["admitted"], 8);
  EXPECT_EQ(manifest["counts"]["dropped"], 2);
  std::set<std::string> seen;
  for (const auto& f : manifest["files"]) {
    const auto name = f["file"].get<std::string>();
    EXPECT_TRUE(seen.insert(name).second) << name;
    if (!f["admitted"].get<bool>()) {
      EXPECT_FALSE(f["reason"].get<std::string>().empty()) << name;
    }
  }
  EXPECT_TRUE(seen.count("Atlantis.mid"));
  EXPECT_TRUE(seen.count("Empty_Land.mid"));
}

TEST(Run, EveryCorpusFileAdmittedOrDroppedOnce) {
  Workdir w("accounting");
  synth::write_demo_corpus(w.str("demo"));
  const auto bytes = synth::build_smf_bytes(synth::anthem_a());
  std::ofstream(w.str("demo/corpus/USA.midi"), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const auto ex = extract_corpus(w.str("demo/corpus"));
  EXPECT_EQ(ex.files.size(), 9u);
  EXPECT_EQ(ex.admitted() + ex.dropped(), ex.files.size());
  EXPECT_EQ(ex.dropped(), 1u);  // second file for "united states"
  for (const auto& f : ex.files) EXPECT_NE(f.admitted, !f.reason.empty()) << f.file;
}

TEST(Run, FailuresAreReported) {
  Workdir w("failures");
  auto config = demo_config(w);
  auto missing = config;
  missing.corpus_dir = w.str("nope");
  EXPECT_THROW(run_pipeline(missing), Error);

  auto unseeded = config;
  unseeded.seed.reset();
  EXPECT_THROW(run_pipeline(unseeded), ConfigError);

  text::write_text_file(w.str("other.csv"), "country,score\nAtlantis,1\nLemuria,2\n");
  auto disjoint = config;
  disjoint.index_specs.resize(1);
  disjoint.index_specs[0].path = w.str("other.csv");
  disjoint.index_specs[0].country_column = std::size_t{0};
  disjoint.index_specs[0].score_column = std::size_t{1};
  disjoint.index_specs[0].rank_column.reset();
  EXPECT_THROW(run_pipeline(disjoint), DataError);
}

TEST(Stages, MatchOneShotRun) {
  Workdir w("stages");
  const auto config = demo_config(w, "all");
  const auto all = run_pipeline(config);
  auto staged = config;
  staged.output_dir = w.str("staged");
  std::map<std::string, std::string> outputs;
  for (auto stage : {run_extract, run_ingest, run_cluster, run_correlate, run_report}) {
    const auto r = stage(staged);
    outputs.insert(r.outputs.begin(), r.outputs.end());
  }
  EXPECT_EQ(outputs, all.outputs);
}

TEST(Stages, FormatSelectionLimitsOptionalOutputs) {
  Workdir w("formats");
  auto config = demo_config(w);
  config.formats = {OutputFormat::kCsv};
  const auto r = run_pipeline(config);
  for (const auto& [path, digest] : r.outputs) EXPECT_EQ(path.find(".svg"), std::string::npos) << path;
  EXPECT_TRUE(r.outputs.count("joined.json"));  // needed by later stages
  EXPECT_TRUE(r.outputs.count("correlations_spearman.csv"));
  EXPECT_FALSE(r.outputs.count("correlations.json"));
}

TEST(Stages, MissingInputNamesProducer) {
  Workdir w("missing_stage");
  RunConfig c;
  c.output_dir = w.str("out");
  c.seed = 1;
  try {
    run_cluster(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("extract"), std::string::npos) << e.what();
  }
}

TEST(Clusters, CsvRoundTrip) {
  ClusterResult r;
  r.anthems = {"anthems", {"a", "b", "c"}, {0, 1, 0}, std::nullopt, ""};
  r.indices.push_back({"h", {"a", "c"}, {1, 0}, std::nullopt, ""});
  const auto csv = write_cluster_csv(r);
  EXPECT_EQ(csv, "country,anthem_cluster,h_cluster\na,0,1\nb,1,\nc,0,0\n");
  const auto back = read_cluster_csv(csv);
  EXPECT_EQ(back.anthems.labels, r.anthems.labels);
  EXPECT_EQ(back.indices[0].countries, r.indices[0].countries);
  EXPECT_EQ(back.indices[0].labels_for({"c", "a"}), (std::vector<int>{0, 1}));
  EXPECT_THROW(back.indices[0].labels_for({"b"}), DataError);
}

TEST(Scale, LargeCorpusRuns) {
  Workdir w("scale");
  synth::write_scale_corpus(w.str("corpus"), 40, 3);
  auto config = load_config(w.str("corpus/run.json"));
  config.output_dir = w.str("out");
  const auto r = run_pipeline(config);
  EXPECT_EQ(json::parse(r.json)["counts"]["admitted"], 40);
}

}  // namespace
}  // namespace anthem::pipeline
