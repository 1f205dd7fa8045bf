#include "cmpm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cmpm {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

void Schema::validate() const {
  std::set<std::string> names;
  for (const auto& attr : attributes) {
    if (attr.name.empty()) throw DataError("schema: empty attribute name");
    if (!names.insert(attr.name).second) throw DataError("schema: duplicate attribute name '" + attr.name + "'");
    if (attr.kind == AttributeKind::categorical) {
      if (attr.categories.empty()) throw DataError("schema: categorical attribute '" + attr.name + "' has no categories");
      std::set<std::string> cats(attr.categories.begin(), attr.categories.end());
      if (cats.size() != attr.categories.size())
        throw DataError("schema: duplicate category in attribute '" + attr.name + "'");
    }
  }
  if (label_column > attributes.size()) throw DataError("schema: label column out of range");
  if (normal_name == attack_name) throw DataError("schema: normal and attack class names must differ");
}

Schema parse_schema(std::string_view text) {
  Schema schema;
  bool have_label = false;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (have_label) throw DataError("schema line " + std::to_string(line_no) + ": content after label line");
    const auto parts = split(line, ':');
    const auto where = "schema line " + std::to_string(line_no) + ": ";
    if (trim(parts[0]) == "label" && parts.size() == 3) {
      std::size_t column = 0;
      const auto col = trim(parts[1]);
      auto [ptr, ec] = std::from_chars(col.data(), col.data() + col.size(), column);
      if (ec != std::errc() || ptr != col.data() + col.size()) throw DataError(where + "bad label column");
      const auto names = split(parts[2], ',');
      if (names.size() != 2) throw DataError(where + "label line needs <normal>,<attack>");
      schema.label_column = column;
      schema.normal_name = std::string(trim(names[0]));
      schema.attack_name = std::string(trim(names[1]));
      have_label = true;
      continue;
    }
    if (parts.size() < 2 || parts.size() > 3) throw DataError(where + "expected name:kind[:categories]");
    AttributeSpec spec;
    spec.name = std::string(trim(parts[0]));
    const auto kind = trim(parts[1]);
    if (kind == "numeric") {
      if (parts.size() != 2) throw DataError(where + "numeric attribute takes no categories");
      spec.kind = AttributeKind::numeric;
    } else if (kind == "categorical") {
      if (parts.size() != 3) throw DataError(where + "categorical attribute needs categories");
      spec.kind = AttributeKind::categorical;
      for (auto c : split(parts[2], ',')) {
        if (trim(c).empty()) throw DataError(where + "empty category name");
        spec.categories.emplace_back(trim(c));
      }
    } else {
      throw DataError(where + "unknown attribute kind '" + std::string(kind) + "'");
    }
    schema.attributes.push_back(std::move(spec));
  }
  if (!have_label) throw DataError("schema: missing label line");
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) { return parse_schema(read_file(path)); }

std::string format_schema(const Schema& schema) {
  std::string out;
  for (const auto& attr : schema.attributes) {
    out += attr.name;
    if (attr.kind == AttributeKind::numeric) {
      out += ":numeric";
    } else {
      out += ":categorical:";
      for (std::size_t i = 0; i < attr.categories.size(); ++i) {
        if (i) out += ',';
        out += attr.categories[i];
      }
    }
    out += '\n';
  }
  out += "label:" + std::to_string(schema.label_column) + ":" + schema.normal_name + "," + schema.attack_name + "\n";
  return out;
}

std::uint64_t schema_digest(const Schema& schema) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : format_schema(schema)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double encode_category(const AttributeSpec& spec, std::string_view value) {
  const auto it = std::find(spec.categories.begin(), spec.categories.end(), value);
  if (it == spec.categories.end())
    throw DataError("unknown category '" + std::string(value) + "' for attribute '" + spec.name + "'");
  return static_cast<double>(it - spec.categories.begin());
}

const std::string& decode_category(const AttributeSpec& spec, double encoded) {
  const double idx = std::nearbyint(encoded);
  if (idx != encoded || idx < 0 || idx >= static_cast<double>(spec.categories.size()))
    throw DataError("value does not encode a category of attribute '" + spec.name + "'");
  return spec.categories[static_cast<std::size_t>(idx)];
}

Dataset make_dataset(Schema schema, const std::vector<std::vector<double>>& rows, const std::vector<Label>& labels) {
  if (rows.size() != labels.size()) throw DataError("row and label counts differ");
  const auto m = schema.attribute_count();
  Dataset data{std::move(schema), Matrix(rows.size(), m), labels};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m)
      throw DataError("row " + std::to_string(i + 1) + ": expected " + std::to_string(m) + " values, got " +
                      std::to_string(rows[i].size()));
    std::copy(rows[i].begin(), rows[i].end(), data.values.row(i).begin());
  }
  return data;
}

Dataset parse_csv(std::string_view text, const Schema& schema, CsvOptions options) {
  schema.validate();
  const auto m = schema.attribute_count();
  std::vector<double> flat;
  std::vector<Label> labels;
  bool header_pending = options.skip_header;
  std::size_t row_no = 0;
  for (auto raw : split(text, '\n')) {
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++row_no;
    const auto where = [&] { return "row " + std::to_string(row_no) + ": "; };
    const auto fields = split(raw, ',');
    if (fields.size() != schema.column_count())
      throw DataError(where() + "expected " + std::to_string(schema.column_count()) + " fields, got " +
                      std::to_string(fields.size()));
    std::size_t attr = 0;
    for (std::size_t col = 0; col < fields.size(); ++col) {
      const auto field = trim(fields[col]);
      if (col == schema.label_column) {
        if (field == schema.normal_name) {
          labels.push_back(Label::normal);
        } else if (field == schema.attack_name) {
          labels.push_back(Label::attack);
        } else {
          throw DataError(where() + "unknown label value '" + std::string(field) + "'");
        }
        continue;
      }
      const auto& spec = schema.attributes[attr++];
      if (spec.kind == AttributeKind::categorical) {
        try {
          flat.push_back(encode_category(spec, field));
        } catch (const DataError& e) {
          throw DataError(where() + e.what());
        }
      } else {
        double v = 0;
        if (!parse_double(field, v))
          throw DataError(where() + "unparseable numeric '" + std::string(field) + "' for attribute '" + spec.name + "'");
        flat.push_back(v);
      }
    }
  }
  if (labels.empty()) throw DataError("no data rows");
  Dataset data{schema, Matrix(labels.size(), m), std::move(labels)};
  std::copy(flat.begin(), flat.end(), data.values.values().begin());
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, CsvOptions options) {
  return parse_csv(read_file(path), schema, options);
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const auto& schema = data.schema;
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t attr = 0;
    for (std::size_t col = 0; col < schema.column_count(); ++col) {
      if (col) out << ',';
      if (col == schema.label_column) {
        out << (data.labels[i] == Label::attack ? schema.attack_name : schema.normal_name);
        continue;
      }
      const auto& spec = schema.attributes[attr];
      const double v = data.values(i, attr++);
      if (spec.kind == AttributeKind::categorical) {
        out << decode_category(spec, v);
      } else {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out.write(buf, ptr - buf);
      }
    }
    out << '\n';
  }
}

NormalizationParams fit_normalizer(const Dataset& data) {
  if (data.size() == 0) throw DataError("fit_normalizer: empty dataset");
  const auto m = data.dims();
  NormalizationParams p;
  auto first = data.row(0);
  p.mins.assign(first.begin(), first.end());
  p.maxs.assign(first.begin(), first.end());
  for (std::size_t i = 1; i < data.size(); ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      p.mins[j] = std::min(p.mins[j], row[j]);
      p.maxs[j] = std::max(p.maxs[j], row[j]);
    }
  }
  return p;
}

void normalize_row(const NormalizationParams& params, std::span<const double> in, std::span<double> out) {
  if (in.size() != params.size() || out.size() != params.size())
    throw DataError("normalizer expects " + std::to_string(params.size()) + " attributes, got " +
                    std::to_string(in.size()));
  for (std::size_t j = 0; j < in.size(); ++j) {
    const double lo = params.mins[j];
    const double hi = params.maxs[j];
    if (!(hi > lo)) {
      out[j] = 0.0;
      continue;
    }
    out[j] = std::clamp((in[j] - lo) / (hi - lo), 0.0, 1.0);
  }
}

Dataset apply_normalizer(const NormalizationParams& params, const Dataset& data) {
  if (params.size() != data.dims())
    throw DataError("normalizer arity " + std::to_string(params.size()) + " does not match dataset arity " +
                    std::to_string(data.dims()));
  Dataset out{data.schema, Matrix(data.size(), data.dims()), data.labels};
  for (std::size_t i = 0; i < data.size(); ++i) normalize_row(params, data.row(i), out.values.row(i));
  return out;
}

}  // namespace cmpm
