#pragma once

// Global-index ingestion and the country join against the anthem feature store.

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "anthem/features.hpp"

namespace anthem::indices {

enum class Direction { kHigherIsBetter, kHigherIsWorse };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

/// Maps normalized alias spellings to canonical country names.
class AliasTable {
 public:
  AliasTable() = default;

  /// CSV with header `alias,canonical`. Throws DataError when a canonical name
  /// is itself an alias (normalization would not be idempotent).
  static AliasTable from_csv(std::string_view csv);

  /// The table shipped in data/country_aliases.csv.
  static const AliasTable& bundled();

  const std::string* find(const std::string& normalized) const;
  std::size_t size() const { return aliases_.size(); }

 private:
  std::unordered_map<std::string, std::string> aliases_;
};

/// Trim, case-fold, strip Latin diacritics, collapse whitespace, apply aliases.
std::string normalize_country_name(std::string_view raw, const AliasTable& aliases = AliasTable::bundled());

/// The same without alias substitution.
std::string fold_country_name(std::string_view raw);

/// Column selected by zero-based position or by header name.
using ColumnRef = std::variant<std::size_t, std::string>;

struct IndexSpec {
  std::string name;
  Direction direction = Direction::kHigherIsBetter;
  ColumnRef country_column = std::size_t{0};
  ColumnRef score_column = std::size_t{1};
  std::optional<ColumnRef> rank_column;
  std::string path;  // CSV location; only used by the pipeline
};

struct IndexEntry {
  double score = 0.0;
  std::optional<int> rank;
  std::size_t source_row = 0;  // 1-based CSV record number (header is row 1)

  bool operator==(const IndexEntry&) const = default;
};

struct IndexTable {
  std::string index_name;
  Direction direction = Direction::kHigherIsBetter;
  std::map<std::string, IndexEntry> rows;  // canonical country -> entry
};

IndexTable parse_index_csv(std::string_view csv, const IndexSpec& spec,
                           const AliasTable& aliases = AliasTable::bundled());

enum class JoinMode { kGlobalIntersection, kPerIndex };

std::string_view to_string(JoinMode m);
JoinMode parse_join_mode(std::string_view s);

/// One index joined against the feature store.
struct IndexJoin {
  std::string index_name;
  Direction direction = Direction::kHigherIsBetter;
  std::vector<std::string> countries;  // sorted
  Eigen::MatrixXd features;            // countries x 8
  Eigen::VectorXd scores;
  std::vector<std::string> dropped_from_features;  // feature-store countries not joined
  std::vector<std::string> dropped_from_index;     // index countries not joined
};

/// Global mode: `countries` is the intersection across the feature store and
/// every index, and `index_scores` is filled (countries x indices).
/// Per-index mode: `countries` is the union of the per-index joins and
/// `index_scores` is empty; use `views` for scores.
struct JoinedDataset {
  JoinMode mode = JoinMode::kGlobalIntersection;
  std::vector<std::string> countries;
  Eigen::MatrixXd features;
  Eigen::MatrixXd index_scores;
  std::vector<IndexJoin> views;

  std::vector<std::string> index_names() const;
  const IndexJoin& view(std::string_view index_name) const;
};

/// Throws DataError on an empty feature store, duplicate countries, or an
/// empty intersection.
JoinedDataset join_corpus_indices(const std::vector<features::FeatureVector>& features,
                                  const std::vector<IndexTable>& indices,
                                  JoinMode mode = JoinMode::kGlobalIntersection);

std::string write_joined_json(const JoinedDataset& joined);
JoinedDataset read_joined_json(std::string_view json_text);

/// `country,<8 features>,<index scores...>` for global mode; per-index mode
/// writes one view.
std::string write_joined_csv(const JoinedDataset& joined);
std::string write_view_csv(const IndexJoin& view);

std::string write_provenance_json(const JoinedDataset& joined);

}  // namespace anthem::indices
