#include "anthem/indices.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "anthem/error.hpp"
#include "anthem/text.hpp"
#include "country_aliases_data.hpp"

namespace anthem::indices {
namespace {

// ASCII replacement for U+00C0..U+00FF; empty keeps the original character.
constexpr const char* kLatin1[64] = {
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",  //
    "d", "n", "o", "o", "o", "o", "o",  "",  "o", "u", "u", "u", "u", "y", "th", "ss",
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",  //
    "d", "n", "o", "o", "o", "o", "o",  "",  "o", "u", "u", "u", "u", "y", "th", "y"};

struct ExtendedRange {
  char32_t first;
  char32_t last;
  const char* ascii;
};

// Latin Extended-A, U+0100..U+017F.
constexpr ExtendedRange kExtendedA[] = {
    {0x0100, 0x0105, "a"}, {0x0106, 0x010D, "c"}, {0x010E, 0x0111, "d"},  {0x0112, 0x011B, "e"},
    {0x011C, 0x0123, "g"}, {0x0124, 0x0127, "h"}, {0x0128, 0x0131, "i"},  {0x0132, 0x0133, "ij"},
    {0x0134, 0x0135, "j"}, {0x0136, 0x0138, "k"}, {0x0139, 0x0142, "l"},  {0x0143, 0x014B, "n"},
    {0x014C, 0x0151, "o"}, {0x0152, 0x0153, "oe"}, {0x0154, 0x0159, "r"}, {0x015A, 0x0161, "s"},
    {0x0162, 0x0167, "t"}, {0x0168, 0x0173, "u"}, {0x0174, 0x0175, "w"},  {0x0176, 0x0178, "y"},
    {0x0179, 0x017E, "z"}, {0x017F, 0x017F, "s"}};

// Decodes one UTF-8 sequence; an invalid byte decodes as U+FFFD.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) { return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80; };
  auto at = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    const char32_t cp = (char32_t{b0 & 0x1Fu} << 6) | at(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    const char32_t cp = (char32_t{b0 & 0x0Fu} << 12) | (at(1) << 6) | at(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    const char32_t cp = (char32_t{b0 & 0x07u} << 18) | (at(1) << 12) | (at(2) << 6) | at(3);
    i += 4;
    return cp;
  }
  ++i;
  return 0xFFFD;
}

void append_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t cp) { return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0xA0; }

std::size_t resolve_column(const ColumnRef& ref, const text::CsvRow& header, const std::string& role) {
  if (const auto* pos = std::get_if<std::size_t>(&ref)) {
    if (*pos >= header.size()) {
      throw DataError("missing column for " + role + ": index " + std::to_string(*pos) + " but header has " +
                      std::to_string(header.size()) + " columns");
    }
    return *pos;
  }
  const std::string want = fold_country_name(std::get<std::string>(ref));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!text::trim(header[i]).empty() && fold_country_name(header[i]) == want) return i;
  }
  throw DataError("missing column for " + role + ": '" + std::get<std::string>(ref) + "'");
}

Eigen::RowVectorXd feature_row(const features::FeatureVector& fv) {
  const auto v = fv.values();
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> sorted_difference(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::vector<std::string> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("joined dataset: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::kHigherIsBetter ? "higher_is_better" : "higher_is_worse";
}

Direction parse_direction(std::string_view s) {
  if (s == "higher_is_better") return Direction::kHigherIsBetter;
  if (s == "higher_is_worse") return Direction::kHigherIsWorse;
  throw ConfigError("unknown index direction '" + std::string(s) + "'");
}

std::string_view to_string(JoinMode m) {
  return m == JoinMode::kGlobalIntersection ? "global_intersection" : "per_index";
}

JoinMode parse_join_mode(std::string_view s) {
  if (s == "global_intersection") return JoinMode::kGlobalIntersection;
  if (s == "per_index") return JoinMode::kPerIndex;
  throw ConfigError("unknown join mode '" + std::string(s) + "'");
}

std::string fold_country_name(std::string_view raw) {
  std::string folded;
  bool pending_space = false;
  for (std::size_t i = 0; i < raw.size();) {
    const char32_t cp = decode_utf8(raw, i);
    if (is_space(cp)) {
      pending_space = !folded.empty();
      continue;
    }
    if (cp >= 0x0300 && cp <= 0x036F) continue;  // combining marks
    if (pending_space) {
      folded.push_back(' ');
      pending_space = false;
    }
    if (cp < 0x80) {
      folded.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp - 'A' + 'a' : cp));
    } else if (cp == 0x2018 || cp == 0x2019 || cp == 0x02BC || cp == 0x00B4) {
      folded.push_back('\'');
    } else if (cp == 0x2010 || cp == 0x2011 || cp == 0x2013 || cp == 0x2014) {
      folded.push_back('-');
    } else if (cp >= 0xC0 && cp <= 0xFF && *kLatin1[cp - 0xC0] != '\0') {
      folded += kLatin1[cp - 0xC0];
    } else {
      const auto* range = std::find_if(std::begin(kExtendedA), std::end(kExtendedA),
                                       [cp](const ExtendedRange& r) { return cp >= r.first && cp <= r.last; });
      if (range != std::end(kExtendedA)) {
        folded += range->ascii;
      } else {
        append_utf8(cp, folded);
      }
    }
  }
  return folded;
}

std::string normalize_country_name(std::string_view raw, const AliasTable& aliases) {
  std::string folded = fold_country_name(raw);
  if (folded.empty()) throw DataError("empty country name");
  if (const auto* canonical = aliases.find(folded)) return *canonical;
  return folded;
}

AliasTable AliasTable::from_csv(std::string_view csv) {
  const auto rows = text::parse_csv(csv);
  AliasTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 2) throw DataError("alias table row " + std::to_string(r + 1) + ": expected 2 fields");
    const std::string alias = fold_country_name(rows[r][0]);
    const std::string canonical = fold_country_name(rows[r][1]);
    if (alias.empty() || canonical.empty()) {
      throw DataError("alias table row " + std::to_string(r + 1) + ": empty name");
    }
    table.aliases_[alias] = canonical;
  }
  for (const auto& [alias, canonical] : table.aliases_) {
    if (table.aliases_.contains(canonical)) {
      throw DataError("alias table: canonical name '" + canonical + "' is also an alias");
    }
  }
  return table;
}

const AliasTable& AliasTable::bundled() {
  static const AliasTable table = from_csv(kBundledCountryAliases);
  return table;
}

const std::string* AliasTable::find(const std::string& normalized) const {
  const auto it = aliases_.find(normalized);
  return it == aliases_.end() ? nullptr : &it->second;
}

IndexTable parse_index_csv(std::string_view csv, const IndexSpec& spec, const AliasTable& aliases) {
  const auto rows = text::parse_csv(csv);
  if (rows.empty()) throw DataError(spec.name + ": empty index file");
  const auto& header = rows.front();
  const std::size_t country_col = resolve_column(spec.country_column, header, "country");
  const std::size_t score_col = resolve_column(spec.score_column, header, "score");
  std::optional<std::size_t> rank_col;
  if (spec.rank_column) rank_col = resolve_column(*spec.rank_column, header, "rank");

  IndexTable table;
  table.index_name = spec.name;
  table.direction = spec.direction;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t row_no = r + 1;
    const std::string where = spec.name + ": row " + std::to_string(row_no);
    const std::size_t needed = std::max({country_col, score_col, rank_col.value_or(0)});
    if (row.size() <= needed) throw DataError(where + ": missing field");

    std::string country;
    try {
      country = normalize_country_name(row[country_col], aliases);
    } catch (const DataError&) {
      throw DataError(where + ": empty country name");
    }
    const auto score = text::parse_double(row[score_col]);
    if (!score) throw DataError(where + ": unparseable score");

    IndexEntry entry{*score, std::nullopt, row_no};
    if (rank_col && !text::trim(row[*rank_col]).empty()) {
      const auto rank = text::parse_integer(row[*rank_col]);
      if (!rank || *rank < 1 || *rank > std::numeric_limits<int>::max()) {
        throw DataError(where + ": invalid rank");
      }
      entry.rank = static_cast<int>(*rank);
    }
    const auto [it, inserted] = table.rows.emplace(country, entry);
    if (!inserted) {
      throw DataError(spec.name + ": duplicate country '" + country + "' in rows " +
                      std::to_string(it->second.source_row) + " and " + std::to_string(row_no));
    }
  }
  return table;
}

std::vector<std::string> JoinedDataset::index_names() const {
  std::vector<std::string> names;
  for (const auto& v : views) names.push_back(v.index_name);
  return names;
}

const IndexJoin& JoinedDataset::view(std::string_view index_name) const {
  for (const auto& v : views) {
    if (v.index_name == index_name) return v;
  }
  throw DataError("no joined view for index '" + std::string(index_name) + "'");
}

JoinedDataset join_corpus_indices(const std::vector<features::FeatureVector>& features,
                                  const std::vector<IndexTable>& indices, JoinMode mode) {
  if (features.empty()) throw DataError("feature store is empty");
  if (indices.empty()) throw DataError("no index tables to join");

  std::map<std::string, const features::FeatureVector*> by_country;
  for (const auto& fv : features) {
    if (!by_country.emplace(fv.country, &fv).second) {
      throw DataError("feature store has duplicate country '" + fv.country + "'");
    }
  }
  std::set<std::string> feature_set;
  for (const auto& [c, _] : by_country) feature_set.insert(c);

  std::set<std::string> global = feature_set;
  std::vector<std::set<std::string>> index_sets;
  for (const auto& table : indices) {
    std::set<std::string> s;
    for (const auto& [c, _] : table.rows) s.insert(c);
    std::set<std::string> kept;
    std::set_intersection(global.begin(), global.end(), s.begin(), s.end(), std::inserter(kept, kept.end()));
    global = std::move(kept);
    index_sets.push_back(std::move(s));
  }

  JoinedDataset joined;
  joined.mode = mode;
  std::set<std::string> union_set;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& table = indices[i];
    std::set<std::string> members;
    if (mode == JoinMode::kGlobalIntersection) {
      members = global;
    } else {
      std::set_intersection(feature_set.begin(), feature_set.end(), index_sets[i].begin(), index_sets[i].end(),
                            std::inserter(members, members.end()));
    }
    if (members.empty()) throw DataError("empty intersection between feature store and index '" + table.index_name + "'");

    IndexJoin view;
    view.index_name = table.index_name;
    view.direction = table.direction;
    view.countries.assign(members.begin(), members.end());
    view.features.resize(static_cast<Eigen::Index>(members.size()), features::kFeatureCount);
    view.scores.resize(static_cast<Eigen::Index>(members.size()));
    Eigen::Index r = 0;
    for (const auto& c : members) {
      view.features.row(r) = feature_row(*by_country.at(c));
      view.scores(r) = table.rows.at(c).score;
      ++r;
    }
    view.dropped_from_features = sorted_difference(feature_set, members);
    view.dropped_from_index = sorted_difference(index_sets[i], members);
    union_set.insert(members.begin(), members.end());
    joined.views.push_back(std::move(view));
  }

  const auto& rows = mode == JoinMode::kGlobalIntersection ? global : union_set;
  joined.countries.assign(rows.begin(), rows.end());
  joined.features.resize(static_cast<Eigen::Index>(rows.size()), features::kFeatureCount);
  Eigen::Index r = 0;
  for (const auto& c : rows) joined.features.row(r++) = feature_row(*by_country.at(c));
  if (mode == JoinMode::kGlobalIntersection) {
    joined.index_scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < joined.views.size(); ++i) {
      joined.index_scores.col(static_cast<Eigen::Index>(i)) = joined.views[i].scores;
    }
  }
  return joined;
}

std::string write_joined_json(const JoinedDataset& joined) {
  nlohmann::ordered_json j;
  j["join_mode"] = to_string(joined.mode);
  j["feature_names"] = features::kFeatureNames;
  j["countries"] = joined.countries;
  j["features"] = matrix_json(joined.features);
  auto views = nlohmann::ordered_json::array();
  for (const auto& v : joined.views) {
    nlohmann::ordered_json o;
    o["index"] = v.index_name;
    o["direction"] = to_string(v.direction);
    o["countries"] = v.countries;
    o["scores"] = std::vector<double>(v.scores.data(), v.scores.data() + v.scores.size());
    o["features"] = matrix_json(v.features);
    o["dropped_from_features"] = v.dropped_from_features;
    o["dropped_from_index"] = v.dropped_from_index;
    views.push_back(std::move(o));
  }
  j["views"] = std::move(views);
  return j.dump(2) + "\n";
}

JoinedDataset read_joined_json(std::string_view json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    JoinedDataset joined;
    joined.mode = parse_join_mode(j.at("join_mode").get<std::string>());
    joined.countries = j.at("countries").get<std::vector<std::string>>();
    joined.features = matrix_from_json(j.at("features"), features::kFeatureCount);
    for (const auto& o : j.at("views")) {
      IndexJoin v;
      v.index_name = o.at("index").get<std::string>();
      v.direction = parse_direction(o.at("direction").get<std::string>());
      v.countries = o.at("countries").get<std::vector<std::string>>();
      const auto scores = o.at("scores").get<std::vector<double>>();
      v.scores = Eigen::Map<const Eigen::VectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size()));
      v.features = matrix_from_json(o.at("features"), features::kFeatureCount);
      v.dropped_from_features = o.at("dropped_from_features").get<std::vector<std::string>>();
      v.dropped_from_index = o.at("dropped_from_index").get<std::vector<std::string>>();
      if (v.countries.size() != scores.size() || static_cast<std::size_t>(v.features.rows()) != scores.size()) {
        throw DataError("joined dataset: view '" + v.index_name + "' has inconsistent lengths");
      }
      joined.views.push_back(std::move(v));
    }
    if (joined.mode == JoinMode::kGlobalIntersection && !joined.views.empty()) {
      joined.index_scores.resize(static_cast<Eigen::Index>(joined.countries.size()),
                                 static_cast<Eigen::Index>(joined.views.size()));
      for (std::size_t i = 0; i < joined.views.size(); ++i) {
        if (joined.views[i].countries != joined.countries) throw DataError("joined dataset: view country mismatch");
        joined.index_scores.col(static_cast<Eigen::Index>(i)) = joined.views[i].scores;
      }
    }
    return joined;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("joined dataset JSON: ") + e.what());
  }
}

std::string write_view_csv(const IndexJoin& view) {
  std::vector<std::string> header{"country"};
  for (auto n : features::kFeatureNames) header.emplace_back(n);
  header.push_back(view.index_name);
  std::string out = text::csv_line(header);
  for (std::size_t r = 0; r < view.countries.size(); ++r) {
    std::vector<std::string> row{view.countries[r]};
    const auto i = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < view.features.cols(); ++c) row.push_back(text::format_double(view.features(i, c)));
    row.push_back(text::format_double(view.scores(i)));
    out += text::csv_line(row);
  }
  return out;
}

std::string write_joined_csv(const JoinedDataset& joined) {
  if (joined.mode == JoinMode::kPerIndex) {
    if (joined.views.size() == 1) return write_view_csv(joined.views.front());
    throw DataError("per-index joins are written one view at a time");
  }
  std::vector<std::string> header{"country"};
  for (auto n : features::kFeatureNames) header.emplace_back(n);
  for (const auto& v : joined.views) header.push_back(v.index_name);
  std::string out = text::csv_line(header);
  for (std::size_t r = 0; r < joined.countries.size(); ++r) {
    std::vector<std::string> row{joined.countries[r]};
    const auto i = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < joined.features.cols(); ++c) row.push_back(text::format_double(joined.features(i, c)));
    for (Eigen::Index c = 0; c < joined.index_scores.cols(); ++c) {
      row.push_back(text::format_double(joined.index_scores(i, c)));
    }
    out += text::csv_line(row);
  }
  return out;
}

std::string write_provenance_json(const JoinedDataset& joined) {
  nlohmann::ordered_json j;
  j["join_mode"] = to_string(joined.mode);
  j["joined_countries"] = joined.countries.size();
  auto per = nlohmann::ordered_json::array();
  for (const auto& v : joined.views) {
    nlohmann::ordered_json o;
    o["index"] = v.index_name;
    o["joined"] = v.countries.size();
    o["dropped_from_features_count"] = v.dropped_from_features.size();
    o["dropped_from_index_count"] = v.dropped_from_index.size();
    o["dropped_from_features"] = v.dropped_from_features;
    o["dropped_from_index"] = v.dropped_from_index;
    per.push_back(std::move(o));
  }
  j["indices"] = std::move(per);
  return j.dump(2) + "\n";
}

}  // namespace anthem::indices
