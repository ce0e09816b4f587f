// Command-line front end: the analysis stages, the end-to-end run, and the
// synthetic corpus generator.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "anthem/error.hpp"
#include "anthem/pipeline.hpp"
#include "anthem/smf.hpp"
#include "anthem/synth.hpp"
#include "anthem/text.hpp"

namespace {

using anthem::pipeline::RunConfig;
using anthem::pipeline::RunStatus;

struct Overrides {
  std::string config;
  std::string corpus_dir;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> k_max;
  std::vector<std::string> formats;
  std::string join_mode;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run config; flags override its values");
  cmd->add_option("--corpus-dir", o.corpus_dir, "Directory of .mid/.midi files");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Clustering seed (required for cluster and run)");
  cmd->add_option("--k-max", o.k_max, "Largest k tried, 3..20");
  cmd->add_option("--format", o.formats, "Output formats (repeatable): csv, json, svg");
  cmd->add_option("--join-mode", o.join_mode, "global_intersection or per_index");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : anthem::pipeline::load_config(o.config);
  if (!o.corpus_dir.empty()) c.corpus_dir = o.corpus_dir;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.k_max) c.k_max = *o.k_max;
  if (!o.formats.empty()) {
    c.formats.clear();
    for (const auto& f : o.formats) c.formats.insert(anthem::pipeline::parse_format(f));
  }
  if (!o.join_mode.empty()) c.join_mode = anthem::indices::parse_join_mode(o.join_mode);
  if (c.output_dir.empty()) throw anthem::ConfigError("no output directory: pass --out or set output_dir");
  return c;
}

int report(const std::string& stage, RunStatus status, const std::map<std::string, std::string>& outputs,
           const std::string& dir) {
  for (const auto& [path, digest] : outputs) std::cout << digest << "  " << path << "\n";
  std::cerr << stage << ": " << anthem::pipeline::to_string(status) << ", " << outputs.size() << " file(s) in "
            << dir << "\n";
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anthem feature extraction and index correlation"};
  app.set_version_flag("--version", std::string(ANTHEM_VERSION));
  app.require_subcommand(1);

  Overrides o;
  auto* extract = app.add_subcommand("extract", "Parse the corpus and write the feature table");
  auto* ingest = app.add_subcommand("ingest", "Read index CSVs and join them with the feature table");
  auto* cluster = app.add_subcommand("cluster", "Cluster anthems and each index");
  auto* correlate = app.add_subcommand("correlate", "Feature/index correlations and heatmaps");
  auto* report_cmd = app.add_subcommand("report", "Qualitative tables and distribution charts");
  auto* run = app.add_subcommand("run", "All stages plus run_manifest.json");
  for (auto* cmd : {extract, ingest, cluster, correlate, report_cmd, run}) add_common(cmd, o);

  auto* synth = app.add_subcommand("synth", "Write synthetic test data");
  synth->require_subcommand(1);
  std::string synth_out;
  int count = 166;
  std::uint64_t synth_seed = 1;
  auto* demo = synth->add_subcommand("demo", "Eight-anthem demo corpus, two indices and a run config");
  demo->add_option("--out", synth_out, "Target directory")->required();
  auto* scale = synth->add_subcommand("scale", "Large random corpus with two indices");
  scale->add_option("--out", synth_out, "Target directory")->required();
  scale->add_option("--count", count, "Number of anthems")->check(CLI::Range(2, 100000));
  scale->add_option("--seed", synth_seed, "Generator seed");
  auto* fixture = synth->add_subcommand("fixture", "The golden feature fixture as a single .mid file");
  fixture->add_option("--out", synth_out, "Target file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (demo->parsed()) {
      const auto layout = anthem::synth::write_demo_corpus(synth_out);
      std::cerr << "wrote " << layout.midi_files.size() << " anthems, config " << layout.config_file << "\n";
      return 0;
    }
    if (scale->parsed()) {
      const auto layout = anthem::synth::write_scale_corpus(synth_out, count, synth_seed);
      std::cerr << "wrote " << layout.midi_files.size() << " anthems, config " << layout.config_file << "\n";
      return 0;
    }
    if (fixture->parsed()) {
      const auto bytes = anthem::synth::build_smf_bytes(anthem::synth::anthem_a());
      const auto parent = std::filesystem::path(synth_out).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      anthem::text::write_text_file(synth_out, std::string(bytes.begin(), bytes.end()));
      return 0;
    }

    const RunConfig config = resolve_config(o);
    namespace p = anthem::pipeline;
    if (run->parsed()) {
      const auto manifest = p::run_pipeline(config);
      return report("run", manifest.status, manifest.outputs, config.output_dir);
    }
    p::StageResult result;
    std::string stage;
    if (extract->parsed()) {
      stage = "extract";
      result = p::run_extract(config);
    } else if (ingest->parsed()) {
      stage = "ingest";
      result = p::run_ingest(config);
    } else if (cluster->parsed()) {
      stage = "cluster";
      result = p::run_cluster(config);
    } else if (correlate->parsed()) {
      stage = "correlate";
      result = p::run_correlate(config);
    } else {
      stage = "report";
      result = p::run_report(config);
    }
    return report(stage, result.status, result.outputs, config.output_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
