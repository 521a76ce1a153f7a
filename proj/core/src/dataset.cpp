#include "nophish/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "nophish/config.hpp"
#include "nophish/error.hpp"
#include "nophish/rng.hpp"
#include "text.hpp"

namespace nophish {

namespace {

std::vector<std::string> catalog_ids() {
  std::vector<std::string> ids;
  ids.reserve(kFeatureCount);
  for (const auto& info : feature_catalog()) ids.emplace_back(info.id);
  return ids;
}

// RFC 4180-style field splitting; quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line, std::string_view source,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && text::trim(field).empty() && !was_quoted) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.emplace_back(was_quoted ? field : std::string(text::trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError(source, line_no, "unterminated quoted field");
  fields.emplace_back(was_quoted ? field : std::string(text::trim(field)));
  return fields;
}

std::string unquote(std::string_view s) {
  s = text::trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // source line of each row
};

RawTable read_csv(std::istream& in, std::string_view source) {
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = split_csv_line(line, source, line_no);
    if (!have_header) {
      if (!fields.empty() && fields.front().size() >= 3 &&
          fields.front().compare(0, 3, "\xEF\xBB\xBF") == 0) {
        fields.front().erase(0, 3);
      }
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.lines.push_back(line_no);
  }
  if (!have_header) throw ParseError(source, 0, "empty CSV file (no header)");
  return table;
}

RawTable read_arff(std::istream& in, std::string_view source) {
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  bool in_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '%') continue;
    if (!in_data) {
      if (body.front() != '@') throw ParseError(source, line_no, "expected an @-declaration");
      if (text::istarts_with(body, "@relation")) continue;
      if (text::istarts_with(body, "@data")) {
        if (table.header.empty()) throw ParseError(source, line_no, "@data before any @attribute");
        in_data = true;
        continue;
      }
      if (text::istarts_with(body, "@attribute")) {
        auto rest = text::trim(body.substr(10));
        std::string name;
        if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
          const auto close = rest.find(rest.front(), 1);
          if (close == std::string_view::npos) throw ParseError(source, line_no, "unterminated attribute name");
          name = std::string(rest.substr(1, close - 1));
          rest = rest.substr(close + 1);
        } else {
          const auto end = rest.find_first_of(" \t");
          if (end == std::string_view::npos) throw ParseError(source, line_no, "attribute without a type");
          name = std::string(rest.substr(0, end));
          rest = rest.substr(end);
        }
        if (text::trim(rest).empty()) throw ParseError(source, line_no, "attribute without a type");
        table.header.push_back(std::move(name));
        continue;
      }
      throw ParseError(source, line_no, "unknown declaration '" + std::string(body.substr(0, 16)) + "'");
    }
    if (body.front() == '{') throw ParseError(source, line_no, "sparse ARFF rows are not supported");
    std::vector<std::string> fields;
    for (auto part : text::split(body, ',')) fields.push_back(unquote(part));
    if (fields.size() != table.header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(table.header.size()) + " values, found " +
                           std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.lines.push_back(line_no);
  }
  if (!in_data) throw ParseError(source, line_no, "missing @data section");
  return table;
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& source_column) {
  if (!source_column.empty() && source_column.front() == '#') {
    const auto idx = text::parse_number<std::size_t>(std::string_view(source_column).substr(1));
    if (!idx || *idx >= header.size()) {
      throw ConfigError("column position '" + source_column + "' is out of range (file has " +
                        std::to_string(header.size()) + " columns)");
    }
    return *idx;
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == source_column) return i;
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (text::iequals(header[i], source_column)) return i;
  }
  throw ConfigError("mapped column '" + source_column + "' not found in input");
}

long long parse_cell(const std::string& raw, std::string_view source, std::size_t line_no,
                     std::size_t row, const std::string& column) {
  if (raw == "?" || raw.empty()) {
    throw ValidationError(row, column, "missing value at " + std::string(source) + ":" + std::to_string(line_no));
  }
  const auto value = text::parse_number<long long>(raw);
  if (!value) {
    throw ParseError(source, line_no, "column '" + column + "': '" + raw + "' is not an integer");
  }
  return *value;
}

}  // namespace

LabeledDataset::LabeledDataset() : feature_names_(catalog_ids()) {}

LabeledDataset::LabeledDataset(std::vector<std::string> feature_names)
    : feature_names_(std::move(feature_names)) {
  if (feature_names_.size() != kFeatureCount) {
    throw ConfigError("a dataset needs exactly " + std::to_string(kFeatureCount) + " feature names, got " +
                      std::to_string(feature_names_.size()));
  }
}

void LabeledDataset::append(std::span<const Ternary> values, Label label, std::uint32_t row_id) {
  if (values.size() != kFeatureCount) {
    throw ValidationError(size() + 1, "*", "row has " + std::to_string(values.size()) + " cells");
  }
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (!is_ternary(values[j])) {
      throw ValidationError(size() + 1, feature_names_[j],
                            "value " + std::to_string(values[j]) + " is not in {-1, 0, 1}");
    }
  }
  cells_.insert(cells_.end(), values.begin(), values.end());
  labels_.push_back(label);
  row_ids_.push_back(row_id);
}

std::size_t LabeledDataset::count(Label label) const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out(feature_names_);
  out.cells_.reserve(indices.size() * kFeatureCount);
  out.labels_.reserve(indices.size());
  out.row_ids_.reserve(indices.size());
  for (const auto i : indices) {
    const auto r = row(i);
    out.cells_.insert(out.cells_.end(), r.begin(), r.end());
    out.labels_.push_back(labels_[i]);
    out.row_ids_.push_back(row_ids_[i]);
  }
  return out;
}

void LabeledDataset::set_column(std::size_t column, std::span<const Ternary> values) {
  for (std::size_t i = 0; i < size(); ++i) cells_[i * kFeatureCount + column] = values[i];
}

void LabeledDataset::validate() const {
  if (feature_names_.size() != kFeatureCount) {
    throw ConfigError("dataset has " + std::to_string(feature_names_.size()) + " feature names");
  }
  if (labels_.empty()) throw ValidationError(0, "*", "dataset is empty");
  if (cells_.size() != labels_.size() * kFeatureCount || row_ids_.size() != labels_.size()) {
    throw ValidationError(0, "*", "dataset storage is inconsistent");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      if (!is_ternary(at(i, j))) throw ValidationError(i + 1, feature_names_[j], "value is not ternary");
    }
    if (!label_from_int(to_int(labels_[i]))) throw ValidationError(i + 1, "label", "label is not -1/+1");
  }
}

DataFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = text::to_lower(path.extension().string());
  if (ext == ".arff") return DataFormat::arff;
  if (ext == ".csv") return DataFormat::csv;
  throw ConfigError("cannot infer data format from '" + path.string() + "' (use .arff or .csv)");
}

std::string_view to_string(DataFormat format) noexcept {
  return format == DataFormat::arff ? "arff" : "csv";
}

ColumnMap ColumnMap::donor_default() {
  ColumnMap map;
  for (const auto& info : feature_catalog()) map.sources[info.index] = std::string(info.donor_column);
  map.label = "Result";
  return map;
}

ColumnMap ColumnMap::identity() {
  ColumnMap map;
  for (const auto& info : feature_catalog()) map.sources[info.index] = std::string(info.id);
  map.label = "label";
  return map;
}

ColumnMap ColumnMap::parse(std::istream& in, std::string_view source) {
  ColumnMap map;
  std::array<bool, kFeatureCount> seen{};
  bool have_label = false;
  for (const auto& entry : parse_key_values(in, source)) {
    if (entry.key == "version") {
      const auto v = text::parse_number<int>(entry.value);
      if (!v) throw ParseError(source, entry.line, "version must be an integer");
      if (*v != 1) throw ConfigError("unsupported column map version " + entry.value + " (supported: 1)");
      map.version = *v;
    } else if (entry.key == "label") {
      map.label = entry.value;
      have_label = true;
    } else if (const auto idx = feature_index(entry.key)) {
      map.sources[*idx] = entry.value;
      seen[*idx] = true;
    } else {
      throw ConfigError(std::string(source) + ":" + std::to_string(entry.line) + ": unknown feature id '" +
                        entry.key + "'");
    }
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!seen[i]) throw ConfigError("column map does not map feature '" + std::string(feature_catalog()[i].id) + "'");
  }
  if (!have_label) throw ConfigError("column map does not name a label column");
  return map;
}

ColumnMap ColumnMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse(in, path.string());
}

LabeledDataset parse_dataset(std::istream& in, DataFormat format, const ColumnMap& columns,
                             std::string_view source_name) {
  const RawTable table = format == DataFormat::csv ? read_csv(in, source_name) : read_arff(in, source_name);

  std::array<std::size_t, kFeatureCount> positions{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) positions[j] = resolve_column(table.header, columns.sources[j]);
  const std::size_t label_pos = resolve_column(table.header, columns.label);

  LabeledDataset ds;
  FeatureValues values{};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    const auto line = table.lines[r];
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const auto& column = table.header[positions[j]];
      const auto v = parse_cell(fields[positions[j]], source_name, line, r + 1, column);
      if (!is_ternary(v)) {
        throw ValidationError(r + 1, column,
                              "value " + std::to_string(v) + " at " + std::string(source_name) + ":" +
                                  std::to_string(line) + " is not in {-1, 0, 1}");
      }
      values[j] = static_cast<Ternary>(v);
    }
    const auto& label_column = table.header[label_pos];
    const auto raw_label = parse_cell(fields[label_pos], source_name, line, r + 1, label_column);
    const auto label = label_from_int(raw_label);
    if (!label) {
      throw ValidationError(r + 1, label_column,
                            "label " + std::to_string(raw_label) + " is not -1 (phishing) or 1 (legitimate)");
    }
    ds.append(values, *label, static_cast<std::uint32_t>(r));
  }
  if (ds.empty()) throw ValidationError(0, "*", std::string(source_name) + " contains no data rows");
  return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open dataset " + path.string());
  return parse_dataset(in, format, columns, path.string());
}

void write_dataset(const LabeledDataset& ds, std::ostream& out, DataFormat format) {
  const auto& names = ds.feature_names();
  if (format == DataFormat::arff) {
    out << "@relation nophish\n\n";
    for (const auto& name : names) out << "@attribute " << name << " {-1,0,1}\n";
    out << "@attribute label {-1,1}\n\n@data\n";
  } else {
    for (const auto& name : names) out << name << ',';
    out << "label\n";
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto v : ds.row(i)) out << static_cast<int>(v) << ',';
    out << to_int(ds.label(i)) << '\n';
  }
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path, DataFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  write_dataset(ds, out, format);
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

TrainTestSplit split(const LabeledDataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  if (n < 2 || n_train == 0 || n_train == n) {
    throw Error(ErrorCode::validation, "split of " + std::to_string(n) + " rows at fraction " +
                                           std::to_string(spec.train_fraction) + " leaves one side empty");
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    std::array<std::vector<std::size_t>, 2> by_class;  // [0] phishing, [1] legitimate
    for (std::size_t i = 0; i < n; ++i) by_class[ds.label(i) == Label::phishing ? 0 : 1].push_back(i);
    if (by_class[0].empty() || by_class[1].empty()) {
      throw Error(ErrorCode::validation, "stratified split needs at least one row of each class");
    }
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
      const double share = spec.train_fraction * static_cast<double>(by_class[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(share));
      remainder[c] = share - static_cast<double>(quota[c]);
      assigned += quota[c];
    }
    // Largest remainder first; phishing wins ties.
    std::size_t extra = n_train - assigned;
    const int first = remainder[1] > remainder[0] ? 1 : 0;
    for (int c : {first, 1 - first}) {
      if (extra > 0 && remainder[c] > 0.0) {
        ++quota[c];
        --extra;
      }
    }
    for (int c = 0; c < 2; ++c) {
      auto& members = by_class[c];
      rng.shuffle(std::span<std::size_t>(members));
      train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
      test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]), members.end());
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

}  // namespace nophish
