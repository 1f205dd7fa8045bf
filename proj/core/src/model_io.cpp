#include "cmpm/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cmpm {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void count(std::size_t v) {
    if (v > 0xffffffffu) throw DataError("model: block too large");
    u32(static_cast<std::uint32_t>(v));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void little(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(little(4)); }
  std::uint64_t u64() { return little(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  // A count of elements that each occupy at least `min_size` bytes.
  std::size_t count(std::size_t min_size) {
    const std::size_t n = u32();
    if (min_size && n > (bytes_.size() - pos_) / min_size) throw DataError("model: declared count exceeds file size");
    return n;
  }
  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw DataError("model: truncated file");
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t little(int width) {
    const auto* p = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void write_doubles(Writer& w, const std::vector<double>& v) {
  w.count(v.size());
  for (double x : v) w.f64(x);
}

std::vector<double> read_doubles(Reader& r) {
  std::vector<double> v(r.count(8));
  for (auto& x : v) x = r.f64();
  return v;
}

Label read_label(Reader& r) {
  const auto v = r.u8();
  if (v > 1) throw DataError("model: bad label byte");
  return static_cast<Label>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const CompressedModel& model) {
  model.validate();
  Writer w;
  w.raw(kModelMagic, sizeof kModelMagic);
  w.u64(model.schema_digest);

  w.count(model.normalizer.size());
  for (double v : model.normalizer.mins) w.f64(v);
  for (double v : model.normalizer.maxs) w.f64(v);

  w.count(model.horizontal.rules.size());
  for (const auto& rule : model.horizontal.rules) {
    w.count(rule.attribute_index);
    w.u64(rule.errors);
    w.u64(rule.total);
    write_doubles(w, rule.bin_edges);
    write_doubles(w, rule.category_values);
    w.count(rule.counts.size());
    for (const auto& [bucket, c] : rule.counts) {
      w.i32(bucket);
      w.u64(c.normal);
      w.u64(c.attack);
      w.u8(static_cast<std::uint8_t>(rule.predictions.at(bucket)));
    }
  }
  w.count(model.horizontal.selected.size());
  for (auto j : model.horizontal.selected) w.count(j);

  const auto& ex = model.exemplars;
  w.count(ex.size());
  w.count(ex.vectors.cols());
  for (double v : ex.vectors.values()) w.f64(v);
  for (auto l : ex.labels) w.u8(static_cast<std::uint8_t>(l));

  w.u8(static_cast<std::uint8_t>(model.provenance));
  w.count(model.parameters.size());
  for (const auto& [key, value] : model.parameters) {
    w.count(key.size());
    w.raw(key.data(), key.size());
    w.f64(value);
  }
  return w.take();
}

CompressedModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof kModelMagic), kModelMagic, sizeof kModelMagic) != 0)
    throw DataError("model: bad magic (not a CMPM1 file)");
  CompressedModel m;
  m.schema_digest = r.u64();

  const auto dims = r.count(16);
  m.normalizer.mins.resize(dims);
  m.normalizer.maxs.resize(dims);
  for (auto& v : m.normalizer.mins) v = r.f64();
  for (auto& v : m.normalizer.maxs) v = r.f64();

  const auto rules = r.count(32);
  for (std::size_t i = 0; i < rules; ++i) {
    AttributeRule rule;
    rule.attribute_index = r.u32();
    rule.errors = r.u64();
    rule.total = r.u64();
    rule.bin_edges = read_doubles(r);
    rule.category_values = read_doubles(r);
    const auto buckets = r.count(21);
    for (std::size_t b = 0; b < buckets; ++b) {
      const auto bucket = r.i32();
      BucketCounts c;
      c.normal = r.u64();
      c.attack = r.u64();
      rule.counts[bucket] = c;
      rule.predictions[bucket] = read_label(r);
    }
    m.horizontal.rules.push_back(std::move(rule));
  }
  const auto k = r.count(4);
  for (std::size_t i = 0; i < k; ++i) m.horizontal.selected.push_back(r.u32());

  const auto count = r.count(1);
  const auto dim = r.u32();
  if (dim && count > (bytes.size() / 8) / dim) throw DataError("model: declared exemplar block exceeds file size");
  m.exemplars.vectors = Matrix(count, dim);
  for (auto& v : m.exemplars.vectors.values()) v = r.f64();
  for (std::size_t i = 0; i < count; ++i) m.exemplars.labels.push_back(read_label(r));

  const auto kind = r.u8();
  if (kind > 2) throw DataError("model: bad provenance kind");
  m.provenance = static_cast<Provenance>(kind);
  const auto params = r.count(12);
  for (std::size_t i = 0; i < params; ++i) {
    const auto len = r.count(1);
    const auto* p = r.take(len);
    std::string key(reinterpret_cast<const char*>(p), len);
    m.parameters.emplace_back(std::move(key), r.f64());
  }
  if (!r.done()) throw DataError("model: trailing bytes after provenance block");
  m.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const CompressedModel& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model " + path.string());
}

CompressedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace cmpm
