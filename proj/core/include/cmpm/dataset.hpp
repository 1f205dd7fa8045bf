#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmpm/common.hpp"

namespace cmpm {

enum class AttributeKind { numeric, categorical };

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  std::vector<std::string> categories;  // categorical only, ordinal order

  bool operator==(const AttributeSpec&) const = default;
};

// Attributes are the non-label CSV columns, in file order. label_column is
// the CSV column holding the class name, so a row has attributes.size() + 1
// fields.
struct Schema {
  std::vector<AttributeSpec> attributes;
  std::size_t label_column = 0;
  std::string normal_name = "normal";
  std::string attack_name = "attack";

  std::size_t attribute_count() const { return attributes.size(); }
  std::size_t column_count() const { return attributes.size() + 1; }

  // Throws DataError when an invariant does not hold.
  void validate() const;

  bool operator==(const Schema&) const = default;
};

// Sidecar format: one `name:kind[:cat1,cat2,...]` line per attribute, then
// `label:<column-index>:<normal-name>,<attack-name>`. Blank lines and lines
// starting with '#' are ignored.
Schema parse_schema(std::string_view text);
Schema load_schema(const std::filesystem::path& path);
std::string format_schema(const Schema& schema);

// FNV-1a over the canonical sidecar text.
std::uint64_t schema_digest(const Schema& schema);

double encode_category(const AttributeSpec& spec, std::string_view value);
const std::string& decode_category(const AttributeSpec& spec, double encoded);

// n x m attribute matrix plus one label per row.
struct Dataset {
  Schema schema;
  Matrix values;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return values.cols(); }
  std::span<const double> row(std::size_t i) const { return values.row(i); }
};

// Builds a dataset from rows; checks arity against the schema.
Dataset make_dataset(Schema schema, const std::vector<std::vector<double>>& rows,
                     const std::vector<Label>& labels);

struct CsvOptions {
  bool skip_header = false;
};

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, CsvOptions options = {});
Dataset parse_csv(std::string_view text, const Schema& schema, CsvOptions options = {});
void write_csv(const std::filesystem::path& path, const Dataset& data);

struct NormalizationParams {
  std::vector<double> mins;
  std::vector<double> maxs;

  std::size_t size() const { return mins.size(); }
  bool operator==(const NormalizationParams&) const = default;
};

NormalizationParams fit_normalizer(const Dataset& data);

// Min-max scaling to [0,1]; constant attributes map to 0 and values outside
// the fitted range are clamped.
Dataset apply_normalizer(const NormalizationParams& params, const Dataset& data);
void normalize_row(const NormalizationParams& params, std::span<const double> in, std::span<double> out);

}  // namespace cmpm
