#pragma once

// End-to-end orchestration: corpus -> features -> index join -> clustering ->
// correlation -> tables and charts, with a manifest of every output.
//
// Each stage reads and writes plain files under the output directory, so the
// CLI can run stages one at a time:
//
//   extract    corpus            -> features.csv, features.json, extraction_log.json
//   ingest     features, indices -> joined.json, joined*.csv, provenance.json
//   cluster    features, joined  -> clusters.csv, cluster_diagnostics.json
//   correlate  joined, clusters  -> correlations_*.csv, correlations.json, heatmap_*.svg
//   report     joined [, corpus] -> qualitative_*.csv, qualitative.json, distributions/*.svg

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "anthem/analysis.hpp"
#include "anthem/features.hpp"
#include "anthem/indices.hpp"
#include "anthem/score.hpp"

namespace anthem::pipeline {

enum class OutputFormat { kCsv, kJson, kSvg };

OutputFormat parse_format(std::string_view s);
std::string_view to_string(OutputFormat f);

struct RunConfig {
  std::string corpus_dir;
  std::vector<indices::IndexSpec> index_specs;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  int k_max = 10;
  indices::JoinMode join_mode = indices::JoinMode::kGlobalIntersection;
  std::set<OutputFormat> formats{OutputFormat::kCsv, OutputFormat::kJson, OutputFormat::kSvg};
};

/// Relative paths inside the config resolve against `base_dir`.
RunConfig parse_config(std::string_view json_text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Throws ConfigError unless the seed is set and k_max is in [3, 20].
void validate_for_clustering(const RunConfig& config);

enum class RunStatus { kSuccess = 0, kPartial = 1, kFailure = 2 };

std::string_view to_string(RunStatus s);

struct FileRecord {
  std::string file;  // name relative to the corpus directory
  std::string country;
  bool admitted = false;
  std::string reason;  // why it was dropped
  std::vector<std::string> warnings;
  std::vector<std::string> repairs;
};

struct Extraction {
  std::vector<features::FeatureVector> features;  // sorted by country
  std::vector<FileRecord> files;                  // sorted by file name
  std::map<std::string, score::Performance> performances;

  std::size_t admitted() const { return features.size(); }
  std::size_t dropped() const { return files.size() - features.size(); }
};

/// Country key for a corpus file: the stem with underscores read as spaces.
std::string country_from_filename(const std::string& filename);

/// Parses every .mid/.midi file in the directory. Unreadable, corrupt, empty
/// or duplicate-country files are recorded as dropped rather than thrown.
Extraction extract_corpus(const std::string& corpus_dir);

std::vector<indices::IndexTable> ingest_indices(const std::vector<indices::IndexSpec>& specs);

struct DatasetClusters {
  std::string name;  // "anthems" or an index name
  std::vector<std::string> countries;
  std::vector<int> labels;  // parallel to countries; empty when not clustered
  std::optional<analysis::KSelection<double>> selection;  // empty when too few rows or read from CSV
  std::string note;

  std::vector<int> labels_for(const std::vector<std::string>& subset) const;
};

struct ClusterResult {
  DatasetClusters anthems;
  std::vector<DatasetClusters> indices;
};

/// Anthems cluster on standardized features; each index clusters on its own
/// standardized score column.
ClusterResult cluster_all(const std::vector<features::FeatureVector>& features, const indices::JoinedDataset& joined,
                          std::uint64_t seed, int k_max);

std::string write_cluster_csv(const ClusterResult& clusters);
/// Reads assignments back; selections are not restored.
ClusterResult read_cluster_csv(std::string_view csv);
std::string write_cluster_diagnostics(const ClusterResult& clusters);

/// Adds per-index agreement between anthem and index clusters over the
/// index's joined countries.
void add_cluster_agreement(analysis::CorrelationReport& report, const indices::JoinedDataset& joined,
                           const ClusterResult& clusters);

std::string write_correlation_csv(const analysis::CorrelationReport& report, bool spearman);
std::string write_correlation_json(const analysis::CorrelationReport& report);
std::string write_qualitative_csv(const analysis::QualitativeTable& table);
std::string write_qualitative_json(const std::vector<analysis::QualitativeTable>& tables);

/// Files written under the output directory and their SHA-256 digests.
class OutputSink {
 public:
  OutputSink(std::string dir, std::set<OutputFormat> formats);

  /// Skipped when `format` is not enabled, unless `required`.
  void write(const std::string& relative_path, std::string_view content, OutputFormat format, bool required = false);

  const std::map<std::string, std::string>& digests() const { return digests_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::set<OutputFormat> formats_;
  std::map<std::string, std::string> digests_;
};

std::string sha256_hex(std::string_view content);

struct StageResult {
  RunStatus status = RunStatus::kSuccess;
  std::map<std::string, std::string> outputs;  // relative path -> sha256
};

StageResult run_extract(const RunConfig& config);
StageResult run_ingest(const RunConfig& config);
StageResult run_cluster(const RunConfig& config);
StageResult run_correlate(const RunConfig& config);
StageResult run_report(const RunConfig& config);

struct RunManifest {
  RunStatus status = RunStatus::kSuccess;
  std::string json;  // exact bytes written to run_manifest.json
  std::map<std::string, std::string> outputs;
};

/// Full pipeline. Throws on unrecoverable failures (bad config, unreadable
/// corpus, fewer than 2 admitted anthems, empty join).
RunManifest run_pipeline(const RunConfig& config);

std::string safe_file_stem(std::string_view name);

}  // namespace anthem::pipeline
