#include "anthem/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "anthem/error.hpp"
#include "anthem/smf.hpp"
#include "anthem/svg.hpp"
#include "anthem/text.hpp"

#ifndef ANTHEM_VERSION
#define ANTHEM_VERSION "0.0.0"
#endif

namespace anthem::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kFeaturesCsv = "features.csv";
constexpr std::string_view kJoinedJson = "joined.json";
constexpr std::string_view kClustersCsv = "clusters.csv";

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base) / path;
  return path.lexically_normal().generic_string();
}

indices::ColumnRef column_from_json(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v < 0) throw ConfigError(where + ": column index must be non-negative");
    return static_cast<std::size_t>(v);
  }
  if (j.is_string()) return j.get<std::string>();
  throw ConfigError(where + ": column must be an index or a header name");
}

json column_to_json(const indices::ColumnRef& ref) {
  if (const auto* i = std::get_if<std::size_t>(&ref)) return *i;
  return std::get<std::string>(ref);
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string out_path(const RunConfig& config, std::string_view rel) {
  if (config.output_dir.empty()) throw ConfigError("no output directory given");
  return (fs::path(config.output_dir) / fs::path(rel)).string();
}

std::string read_stage_input(const RunConfig& config, std::string_view rel, std::string_view producer) {
  const auto path = out_path(config, rel);
  if (!fs::exists(path)) {
    throw Error("missing " + std::string(rel) + " in " + config.output_dir + "; run '" + std::string(producer) + "' first");
  }
  return text::read_text_file(path);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

json file_record_json(const FileRecord& r) {
  json j{{"file", r.file}, {"country", r.country}, {"admitted", r.admitted}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  if (!r.repairs.empty()) j["repairs"] = r.repairs;
  return j;
}

json extraction_json(const Extraction& ex) {
  json files = json::array();
  for (const auto& r : ex.files) files.push_back(file_record_json(r));
  return json{{"files_found", ex.files.size()}, {"admitted", ex.admitted()}, {"dropped", ex.dropped()}, {"files", files}};
}

json config_json(const RunConfig& c) {
  json specs = json::array();
  for (const auto& s : c.index_specs) {
    json cols{{"country", column_to_json(s.country_column)}, {"score", column_to_json(s.score_column)}};
    if (s.rank_column) cols["rank"] = column_to_json(*s.rank_column);
    specs.push_back({{"name", s.name}, {"path", s.path}, {"direction", indices::to_string(s.direction)}, {"columns", cols}});
  }
  json formats = json::array();
  for (auto f : c.formats) formats.push_back(to_string(f));
  json j{{"corpus_dir", c.corpus_dir}, {"output_dir", c.output_dir},  {"k_max", c.k_max},
         {"join_mode", indices::to_string(c.join_mode)}, {"formats", formats}, {"indices", specs}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

json join_json(const indices::JoinedDataset& joined, const std::vector<indices::IndexTable>& tables) {
  json out = json::array();
  for (std::size_t i = 0; i < joined.views.size(); ++i) {
    const auto& v = joined.views[i];
    out.push_back({{"index", v.index_name},
                   {"index_rows", i < tables.size() ? tables[i].rows.size() : 0},
                   {"joined", v.countries.size()},
                   {"dropped_from_features", v.dropped_from_features},
                   {"dropped_from_index", v.dropped_from_index}});
  }
  return out;
}

json dataset_k_json(const DatasetClusters& d) {
  json j{{"rows", d.countries.size()}};
  if (d.selection) {
    j["k"] = d.selection->k;
    j["elbow_k"] = d.selection->elbow_k;
  } else {
    j["k"] = nullptr;
    j["note"] = d.note;
  }
  return j;
}

DatasetClusters cluster_rows(std::string name, std::vector<std::string> countries, const Eigen::MatrixXd& data,
                             std::uint64_t seed, int k_max) {
  DatasetClusters out;
  out.name = std::move(name);
  out.countries = std::move(countries);
  const auto n = static_cast<int>(data.rows());
  if (n < 3) {
    out.note = "too few rows to cluster (" + std::to_string(n) + ")";
    return out;
  }
  const auto z = analysis::standardize(data);
  out.selection = analysis::select_k(z, std::min(k_max, n), seed);
  out.labels = out.selection->model.assignments;
  return out;
}

void write_extract_outputs(OutputSink& sink, const Extraction& ex) {
  sink.write(std::string(kFeaturesCsv), features::write_feature_csv(ex.features), OutputFormat::kCsv, true);
  sink.write("features.json", features::write_feature_json(ex.features), OutputFormat::kJson);
  sink.write("extraction_log.json", dump(extraction_json(ex)), OutputFormat::kJson);
}

void write_ingest_outputs(OutputSink& sink, const indices::JoinedDataset& joined) {
  sink.write(std::string(kJoinedJson), indices::write_joined_json(joined), OutputFormat::kJson, true);
  if (joined.mode == indices::JoinMode::kGlobalIntersection) {
    sink.write("joined.csv", indices::write_joined_csv(joined), OutputFormat::kCsv);
  } else {
    for (const auto& v : joined.views) {
      sink.write("joined_" + safe_file_stem(v.index_name) + ".csv", indices::write_view_csv(v), OutputFormat::kCsv);
    }
  }
  sink.write("provenance.json", indices::write_provenance_json(joined), OutputFormat::kJson);
}

void write_cluster_outputs(OutputSink& sink, const ClusterResult& clusters) {
  sink.write(std::string(kClustersCsv), write_cluster_csv(clusters), OutputFormat::kCsv, true);
  sink.write("cluster_diagnostics.json", write_cluster_diagnostics(clusters), OutputFormat::kJson);
}

void write_correlate_outputs(OutputSink& sink, const analysis::CorrelationReport& report) {
  sink.write("correlations_pearson.csv", write_correlation_csv(report, false), OutputFormat::kCsv);
  sink.write("correlations_spearman.csv", write_correlation_csv(report, true), OutputFormat::kCsv);
  sink.write("correlations.json", write_correlation_json(report), OutputFormat::kJson);

  std::vector<std::string> rows;
  for (auto label : features::kFeatureLabels) rows.emplace_back(label);
  report::HeatmapOptions options;
  options.undefined = report.pearson.array().isNaN();
  options.title = "Pearson correlation";
  sink.write("heatmap_pearson.svg", report::render_heatmap_svg(report.pearson, rows, report.index_names, options),
             OutputFormat::kSvg);
  options.undefined = report.spearman.array().isNaN();
  options.title = "Spearman correlation";
  sink.write("heatmap_spearman.svg", report::render_heatmap_svg(report.spearman, rows, report.index_names, options),
             OutputFormat::kSvg);
}

void write_report_outputs(OutputSink& sink, const std::vector<analysis::QualitativeTable>& tables) {
  for (const auto& t : tables) {
    sink.write("qualitative_" + safe_file_stem(t.index_name) + ".csv", write_qualitative_csv(t), OutputFormat::kCsv);
  }
  sink.write("qualitative.json", write_qualitative_json(tables), OutputFormat::kJson);
}

void write_distributions(OutputSink& sink, const Extraction& ex) {
  for (const auto& [country, perf] : ex.performances) {
    sink.write("distributions/" + safe_file_stem(country) + ".svg", report::render_distributions_svg(perf, country),
               OutputFormat::kSvg);
  }
}

std::vector<analysis::QualitativeTable> qualitative_tables(const indices::JoinedDataset& joined) {
  std::vector<analysis::QualitativeTable> out;
  for (const auto& v : joined.views) {
    if (v.countries.size() >= 4) out.push_back(analysis::qualitative_labels(v));
  }
  return out;
}

void require_corpus(const RunConfig& config) {
  if (config.corpus_dir.empty()) throw ConfigError("no corpus directory given");
}

void require_indices(const RunConfig& config) {
  if (config.index_specs.empty()) throw ConfigError("no indices configured");
}

}  // namespace

OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "json") return OutputFormat::kJson;
  if (s == "svg") return OutputFormat::kSvg;
  throw ConfigError("unknown output format '" + std::string(s) + "' (expected csv, json or svg)");
}

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::kCsv: return "csv";
    case OutputFormat::kJson: return "json";
    case OutputFormat::kSvg: return "svg";
  }
  return "csv";
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kSuccess: return "success";
    case RunStatus::kPartial: return "partial";
    case RunStatus::kFailure: return "failure";
  }
  return "failure";
}

RunConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  try {
    if (j.contains("corpus_dir")) c.corpus_dir = resolve(base_dir, j.at("corpus_dir").get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    if (j.contains("seed") && !j.at("seed").is_null()) {
      const auto& s = j.at("seed");
      if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0)) {
        throw ConfigError("seed must be a non-negative integer");
      }
      c.seed = s.get<std::uint64_t>();
    }
    if (j.contains("k_max")) {
      if (!j.at("k_max").is_number_integer()) throw ConfigError("k_max must be an integer");
      c.k_max = j.at("k_max").get<int>();
    }
    if (j.contains("join_mode")) c.join_mode = indices::parse_join_mode(j.at("join_mode").get<std::string>());
    if (j.contains("formats")) {
      c.formats.clear();
      for (const auto& f : j.at("formats")) c.formats.insert(parse_format(f.get<std::string>()));
    }
    if (j.contains("indices")) {
      for (const auto& item : j.at("indices")) {
        indices::IndexSpec spec;
        spec.name = item.at("name").get<std::string>();
        if (spec.name.empty()) throw ConfigError("index name must not be empty");
        spec.path = resolve(base_dir, item.at("path").get<std::string>());
        if (item.contains("direction")) spec.direction = indices::parse_direction(item.at("direction").get<std::string>());
        if (item.contains("columns")) {
          const auto& cols = item.at("columns");
          const std::string where = "index '" + spec.name + "'";
          if (cols.contains("country")) spec.country_column = column_from_json(cols.at("country"), where);
          if (cols.contains("score")) spec.score_column = column_from_json(cols.at("score"), where);
          if (cols.contains("rank") && !cols.at("rank").is_null()) {
            spec.rank_column = column_from_json(cols.at("rank"), where);
          }
        }
        for (const auto& other : c.index_specs) {
          if (other.name == spec.name) throw ConfigError("duplicate index name '" + spec.name + "'");
        }
        c.index_specs.push_back(std::move(spec));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string content;
  try {
    content = text::read_text_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  auto base = fs::path(path).parent_path().string();
  if (base.empty()) base = ".";
  return parse_config(content, base);
}

void validate_for_clustering(const RunConfig& config) {
  if (!config.seed) throw ConfigError("a seed is required for clustering (--seed or \"seed\" in the config)");
  if (config.k_max < 3 || config.k_max > 20) {
    throw ConfigError("k_max must be between 3 and 20, got " + std::to_string(config.k_max));
  }
}

std::string country_from_filename(const std::string& filename) {
  std::string stem = fs::path(filename).stem().string();
  std::replace(stem.begin(), stem.end(), '_', ' ');
  return stem;
}

Extraction extract_corpus(const std::string& corpus_dir) {
  std::error_code ec;
  if (!fs::is_directory(corpus_dir, ec)) throw Error("corpus directory not readable: " + corpus_dir);

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(corpus_dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lower(entry.path().extension().string());
    if (ext == ".mid" || ext == ".midi") names.push_back(entry.path().filename().string());
  }
  if (ec) throw Error("corpus directory not readable: " + corpus_dir + ": " + ec.message());
  std::sort(names.begin(), names.end());

  Extraction out;
  std::map<std::string, std::string> owner;  // country -> file
  for (const auto& name : names) {
    FileRecord rec;
    rec.file = name;
    try {
      rec.country = indices::normalize_country_name(country_from_filename(name));
      if (const auto it = owner.find(rec.country); it != owner.end()) {
        throw DataError("duplicate country '" + rec.country + "' (already read from " + it->second + ")");
      }
      const auto bytes = smf::read_file_bytes((fs::path(corpus_dir) / name).string());
      const auto file = smf::parse_smf(bytes);
      rec.warnings = file.warnings;
      auto perf = score::build_performance(file);
      rec.repairs = perf.repairs;
      if (perf.notes.empty()) throw DegeneratePerformance("no pitched notes");
      out.features.push_back(features::extract_feature_vector(perf, rec.country));
      owner[rec.country] = name;
      out.performances.emplace(rec.country, std::move(perf));
      rec.admitted = true;
    } catch (const Error& e) {
      rec.reason = e.what();
    }
    out.files.push_back(std::move(rec));
  }
  std::sort(out.features.begin(), out.features.end(),
            [](const auto& a, const auto& b) { return a.country < b.country; });
  return out;
}

std::vector<indices::IndexTable> ingest_indices(const std::vector<indices::IndexSpec>& specs) {
  std::vector<indices::IndexTable> out;
  for (const auto& spec : specs) {
    std::string content;
    try {
      content = text::read_text_file(spec.path);
    } catch (const Error& e) {
      throw DataError("index '" + spec.name + "': " + e.what());
    }
    out.push_back(indices::parse_index_csv(content, spec));
  }
  return out;
}

std::vector<int> DatasetClusters::labels_for(const std::vector<std::string>& subset) const {
  std::map<std::string, int> by_country;
  for (std::size_t i = 0; i < countries.size() && i < labels.size(); ++i) by_country[countries[i]] = labels[i];
  std::vector<int> out;
  out.reserve(subset.size());
  for (const auto& c : subset) {
    const auto it = by_country.find(c);
    if (it == by_country.end()) throw DataError("no " + name + " cluster for '" + c + "'");
    out.push_back(it->second);
  }
  return out;
}

ClusterResult cluster_all(const std::vector<features::FeatureVector>& feats, const indices::JoinedDataset& joined,
                          std::uint64_t seed, int k_max) {
  ClusterResult out;
  std::vector<std::string> countries;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(feats.size()), static_cast<Eigen::Index>(features::kFeatureCount));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    countries.push_back(feats[i].country);
    const auto v = feats[i].values();
    for (std::size_t c = 0; c < v.size(); ++c) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[c];
  }
  out.anthems = cluster_rows("anthems", std::move(countries), data, seed, k_max);
  for (const auto& view : joined.views) {
    out.indices.push_back(cluster_rows(view.index_name, view.countries, Eigen::MatrixXd(view.scores), seed, k_max));
  }
  return out;
}

std::string write_cluster_csv(const ClusterResult& clusters) {
  std::vector<std::string> header{"country", "anthem_cluster"};
  std::vector<std::map<std::string, int>> index_labels;
  for (const auto& d : clusters.indices) {
    header.push_back(d.name + "_cluster");
    std::map<std::string, int> m;
    for (std::size_t i = 0; i < d.countries.size() && i < d.labels.size(); ++i) m[d.countries[i]] = d.labels[i];
    index_labels.push_back(std::move(m));
  }
  std::string out = text::csv_line(header);
  const auto& a = clusters.anthems;
  for (std::size_t i = 0; i < a.countries.size(); ++i) {
    std::vector<std::string> row{a.countries[i], i < a.labels.size() ? std::to_string(a.labels[i]) : ""};
    for (const auto& m : index_labels) {
      const auto it = m.find(a.countries[i]);
      row.push_back(it == m.end() ? "" : std::to_string(it->second));
    }
    out += text::csv_line(row);
  }
  return out;
}

ClusterResult read_cluster_csv(std::string_view csv) {
  const auto rows = text::parse_csv(csv);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "country" || rows[0][1] != "anthem_cluster") {
    throw DataError("clusters.csv: expected header 'country,anthem_cluster,...'");
  }
  constexpr std::string_view suffix = "_cluster";
  ClusterResult out;
  out.anthems.name = "anthems";
  for (std::size_t c = 2; c < rows[0].size(); ++c) {
    const auto& h = rows[0][c];
    if (h.size() <= suffix.size() || h.compare(h.size() - suffix.size(), suffix.size(), suffix) != 0) {
      throw DataError("clusters.csv: unexpected column '" + h + "'");
    }
    DatasetClusters d;
    d.name = h.substr(0, h.size() - suffix.size());
    out.indices.push_back(std::move(d));
  }
  auto take = [](DatasetClusters& d, const std::string& country, const std::string& cell, std::size_t row) {
    if (cell.empty()) return;
    const auto v = text::parse_integer(cell);
    if (!v || *v < 0) throw DataError("clusters.csv: row " + std::to_string(row) + ": bad cluster id '" + cell + "'");
    d.countries.push_back(country);
    d.labels.push_back(static_cast<int>(*v));
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size()) throw DataError("clusters.csv: row " + std::to_string(r + 1) + ": wrong field count");
    take(out.anthems, row[0], row[1], r + 1);
    for (std::size_t c = 2; c < row.size(); ++c) take(out.indices[c - 2], row[0], row[c], r + 1);
  }
  return out;
}

std::string write_cluster_diagnostics(const ClusterResult& clusters) {
  auto one = [](const DatasetClusters& d) {
    json j{{"name", d.name}, {"rows", d.countries.size()}};
    if (!d.selection) {
      j["k"] = nullptr;
      j["note"] = d.note;
      return j;
    }
    const auto& s = *d.selection;
    json inertia = json::object();
    for (const auto& [k, v] : s.inertia) inertia[std::to_string(k)] = nullable(v);
    json silhouette = json::object();
    for (const auto& [k, v] : s.silhouette) silhouette[std::to_string(k)] = nullable(v);
    j["k"] = s.k;
    j["elbow_k"] = s.elbow_k;
    j["seed"] = s.seed;
    j["inertia"] = inertia;
    j["silhouette"] = silhouette;
    j["iterations"] = s.model.iterations;
    j["chosen_inertia"] = nullable(s.model.inertia);
    return j;
  };
  json datasets = json::array();
  datasets.push_back(one(clusters.anthems));
  for (const auto& d : clusters.indices) datasets.push_back(one(d));
  return dump(json{{"standardization", "z-score per column (population sd)"},
                   {"selection", "k with the highest mean silhouette; elbow reported"},
                   {"datasets", datasets}});
}

void add_cluster_agreement(analysis::CorrelationReport& report, const indices::JoinedDataset& joined,
                           const ClusterResult& clusters) {
  if (clusters.anthems.labels.empty()) return;
  for (const auto& view : joined.views) {
    const auto it = std::find_if(clusters.indices.begin(), clusters.indices.end(),
                                 [&](const DatasetClusters& d) { return d.name == view.index_name; });
    if (it == clusters.indices.end() || it->labels.empty()) continue;
    report.cluster_agreement[view.index_name] =
        analysis::cluster_agreement(clusters.anthems.labels_for(view.countries), it->labels_for(view.countries));
  }
}

std::string write_correlation_csv(const analysis::CorrelationReport& report, bool spearman) {
  const auto& m = spearman ? report.spearman : report.pearson;
  std::vector<std::string> header{"feature"};
  header.insert(header.end(), report.index_names.begin(), report.index_names.end());
  std::string out = text::csv_line(header);
  for (Eigen::Index f = 0; f < m.rows(); ++f) {
    std::vector<std::string> row{report.feature_names[static_cast<std::size_t>(f)]};
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(std::isfinite(m(f, j)) ? text::format_double(m(f, j)) : "NA");
    }
    out += text::csv_line(row);
  }
  return out;
}

std::string write_correlation_json(const analysis::CorrelationReport& report) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index f = 0; f < m.rows(); ++f) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(nullable(m(f, j)));
      rows.push_back(row);
    }
    return rows;
  };
  json sizes = json::object();
  for (std::size_t i = 0; i < report.index_names.size() && i < report.sample_sizes.size(); ++i) {
    sizes[report.index_names[i]] = report.sample_sizes[i];
  }
  json agreements = json::object();
  for (const auto& [name, a] : report.cluster_agreement) {
    json table = json::array();
    for (Eigen::Index r = 0; r < a.contingency.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < a.contingency.cols(); ++c) row.push_back(a.contingency(r, c));
      table.push_back(row);
    }
    agreements[name] = {{"anthem_clusters", a.row_labels},
                        {"index_clusters", a.col_labels},
                        {"contingency", table},
                        {"adjusted_rand", a.adjusted_rand},
                        {"cramers_v", a.cramers_v}};
  }
  return dump(json{{"features", report.feature_names},
                   {"indices", report.index_names},
                   {"sample_sizes", sizes},
                   {"pearson", matrix(report.pearson)},
                   {"spearman", matrix(report.spearman)},
                   {"undefined", report.undefined},
                   {"cluster_agreement", agreements}});
}

std::string write_qualitative_csv(const analysis::QualitativeTable& table) {
  std::string out = text::csv_line({"Musical Characteristics", "Low", "High", "low_group_z", "high_group_z"});
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string label = i < features::kFeatureLabels.size() ? std::string(features::kFeatureLabels[i]) : r.feature;
    out += text::csv_line({label, std::string(analysis::to_string(r.low)), std::string(analysis::to_string(r.high)),
                           text::format_double(r.low_group_z), text::format_double(r.high_group_z)});
  }
  return out;
}

std::string write_qualitative_json(const std::vector<analysis::QualitativeTable>& tables) {
  json list = json::array();
  for (const auto& t : tables) {
    json rows = json::array();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      rows.push_back({{"feature", r.feature},
                      {"label", i < features::kFeatureLabels.size() ? features::kFeatureLabels[i] : r.feature},
                      {"low", analysis::to_string(r.low)},
                      {"high", analysis::to_string(r.high)},
                      {"low_group_z", r.low_group_z},
                      {"high_group_z", r.high_group_z}});
    }
    list.push_back({{"index", t.index_name},
                    {"direction", indices::to_string(t.direction)},
                    {"low_count", t.low_count},
                    {"high_count", t.high_count},
                    {"median_score", t.median_score},
                    {"rows", rows}});
  }
  const json thresholds = json::array({
      {{"label", "Very High"}, {"z", ">= 1"}},
      {{"label", "High"}, {"z", "[0.5, 1)"}},
      {{"label", "Slightly High"}, {"z", "[0.15, 0.5)"}},
      {{"label", "Average"}, {"z", "(-0.15, 0.15)"}},
      {{"label", "Slightly Low"}, {"z", "(-0.5, -0.15]"}},
      {{"label", "Low"}, {"z", "(-1, -0.5]"}},
      {{"label", "Very Low"}, {"z", "<= -1"}},
  });
  return dump(json{{"split", "median of the raw index score; with an odd count the median country is in neither group"},
                   {"statistic", "group mean of per-feature z-scores over the index's joined countries"},
                   {"thresholds", thresholds},
                   {"tables", list}});
}

OutputSink::OutputSink(std::string dir, std::set<OutputFormat> formats)
    : dir_(std::move(dir)), formats_(std::move(formats)) {}

void OutputSink::write(const std::string& relative_path, std::string_view content, OutputFormat format, bool required) {
  if (!required && !formats_.count(format)) return;
  const fs::path path = fs::path(dir_) / relative_path;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create " + path.parent_path().string() + ": " + ec.message());
  text::write_text_file(path.string(), content);
  digests_[fs::path(relative_path).generic_string()] = sha256_hex(content);
}

std::string sha256_hex(std::string_view content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

StageResult run_extract(const RunConfig& config) {
  require_corpus(config);
  const auto ex = extract_corpus(config.corpus_dir);
  if (ex.admitted() == 0) throw Error("no admissible anthems in " + config.corpus_dir);
  OutputSink sink(config.output_dir, config.formats);
  write_extract_outputs(sink, ex);
  return {ex.dropped() ? RunStatus::kPartial : RunStatus::kSuccess, sink.digests()};
}

StageResult run_ingest(const RunConfig& config) {
  require_indices(config);
  const auto feats = features::read_feature_csv(read_stage_input(config, kFeaturesCsv, "extract"));
  const auto joined = indices::join_corpus_indices(feats, ingest_indices(config.index_specs), config.join_mode);
  OutputSink sink(config.output_dir, config.formats);
  write_ingest_outputs(sink, joined);
  return {RunStatus::kSuccess, sink.digests()};
}

StageResult run_cluster(const RunConfig& config) {
  validate_for_clustering(config);
  const auto feats = features::read_feature_csv(read_stage_input(config, kFeaturesCsv, "extract"));
  const auto joined = indices::read_joined_json(read_stage_input(config, kJoinedJson, "ingest"));
  const auto clusters = cluster_all(feats, joined, *config.seed, config.k_max);
  OutputSink sink(config.output_dir, config.formats);
  write_cluster_outputs(sink, clusters);
  return {RunStatus::kSuccess, sink.digests()};
}

StageResult run_correlate(const RunConfig& config) {
  const auto joined = indices::read_joined_json(read_stage_input(config, kJoinedJson, "ingest"));
  auto report = analysis::correlate(joined);
  if (fs::exists(out_path(config, kClustersCsv))) {
    add_cluster_agreement(report, joined, read_cluster_csv(text::read_text_file(out_path(config, kClustersCsv))));
  }
  OutputSink sink(config.output_dir, config.formats);
  write_correlate_outputs(sink, report);
  return {report.undefined.empty() ? RunStatus::kSuccess : RunStatus::kPartial, sink.digests()};
}

StageResult run_report(const RunConfig& config) {
  const auto joined = indices::read_joined_json(read_stage_input(config, kJoinedJson, "ingest"));
  OutputSink sink(config.output_dir, config.formats);
  write_report_outputs(sink, qualitative_tables(joined));
  RunStatus status = RunStatus::kSuccess;
  if (!config.corpus_dir.empty()) {
    const auto ex = extract_corpus(config.corpus_dir);
    write_distributions(sink, ex);
    if (ex.dropped()) status = RunStatus::kPartial;
  }
  return {status, sink.digests()};
}

RunManifest run_pipeline(const RunConfig& config) {
  require_corpus(config);
  require_indices(config);
  validate_for_clustering(config);
  if (config.output_dir.empty()) throw ConfigError("no output directory given");

  const auto ex = extract_corpus(config.corpus_dir);
  if (ex.admitted() < 2) {
    throw DataError("need at least 2 admitted anthems, found " + std::to_string(ex.admitted()) + " in " +
                    config.corpus_dir);
  }
  const auto tables = ingest_indices(config.index_specs);
  const auto joined = indices::join_corpus_indices(ex.features, tables, config.join_mode);
  const auto clusters = cluster_all(ex.features, joined, *config.seed, config.k_max);
  auto report = analysis::correlate(joined);
  add_cluster_agreement(report, joined, clusters);

  OutputSink sink(config.output_dir, config.formats);
  write_extract_outputs(sink, ex);
  write_ingest_outputs(sink, joined);
  write_cluster_outputs(sink, clusters);
  write_correlate_outputs(sink, report);
  write_report_outputs(sink, report.qualitative);
  write_distributions(sink, ex);

  RunManifest manifest;
  manifest.status = ex.dropped() ? RunStatus::kPartial : RunStatus::kSuccess;
  manifest.outputs = sink.digests();

  json chosen = json::object();
  chosen["anthems"] = dataset_k_json(clusters.anthems);
  for (const auto& d : clusters.indices) chosen[d.name] = dataset_k_json(d);
  json outputs = json::object();
  for (const auto& [path, digest] : manifest.outputs) outputs[path] = digest;
  auto log = extraction_json(ex);

  json j;
  j["tool"] = "anthem";
  j["version"] = ANTHEM_VERSION;
  j["status"] = to_string(manifest.status);
  j["config"] = config_json(config);
  j["counts"] = {{"files_found", log["files_found"]}, {"admitted", log["admitted"]}, {"dropped", log["dropped"]},
                 {"joined", joined.countries.size()}};
  j["files"] = log["files"];
  j["join"] = join_json(joined, tables);
  j["clusters"] = chosen;
  j["undefined_correlations"] = report.undefined;
  j["outputs"] = outputs;
  manifest.json = dump(j);
  text::write_text_file((fs::path(config.output_dir) / "run_manifest.json").string(), manifest.json);
  return manifest;
}

std::string safe_file_stem(std::string_view name) {
  std::string out;
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "unnamed" : out;
}

}  // namespace anthem::pipeline
