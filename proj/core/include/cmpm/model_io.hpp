#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmpm/classify.hpp"

namespace cmpm {

// Little-endian binary layout:
//
//   "CMPM1"                                  5 bytes
//   schema digest                            u64
//   normalizer   m:u32, mins f64[m], maxs f64[m]
//   rules        count:u32, then per rule
//                  attribute:u32 errors:u64 total:u64
//                  edges:u32 f64[edges] categories:u32 f64[categories]
//                  buckets:u32 {bucket:i32 normal:u64 attack:u64 prediction:u8}[buckets]
//   selected     k:u32, u32[k]
//   exemplars    count:u32 dim:u32, f64[count*dim] row-major, u8[count] labels
//   provenance   kind:u8 params:u32 {len:u32 bytes[len] value:f64}[params]
inline constexpr char kModelMagic[5] = {'C', 'M', 'P', 'M', '1'};

std::vector<std::uint8_t> serialize_model(const CompressedModel& model);
CompressedModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const CompressedModel& model);
CompressedModel load_model(const std::filesystem::path& path);

}  // namespace cmpm
