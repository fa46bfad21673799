#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fld/pipeline.hpp"
#include "fld/synthetic.hpp"
#include "fld/tensor.hpp"

namespace fld {

// FVEC layout (all integers little-endian):
//   bytes 0-3   magic "FLD1"
//   bytes 4-7   u32 row count n
//   bytes 8-11  u32 column count d
//   byte  12    u8 dtype, 0 = IEEE-754 binary32
//   then n*d binary32 values, row-major, little-endian.
enum class FeatureFormat { Fvec, Csv };

inline constexpr std::size_t kFvecHeaderBytes = 13;

// .csv -> Csv, anything else -> Fvec.
FeatureFormat format_for_path(const std::filesystem::path& path);

FeatureMatrix read_features(const std::filesystem::path& path, FeatureFormat format,
                            Role role = Role::Train);
FeatureMatrix read_features(const std::filesystem::path& path, Role role = Role::Train);

FeatureMatrix parse_fvec(std::string_view bytes, Role role = Role::Train);
std::string encode_fvec(const FeatureMatrix& matrix);
FeatureMatrix parse_csv(std::string_view text, Role role = Role::Train);
std::string encode_csv(const FeatureMatrix& matrix);

void write_features(const FeatureMatrix& matrix, const std::filesystem::path& path,
                    FeatureFormat format);
void write_features(const FeatureMatrix& matrix, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a 64-bit digest rendered as 16 hex digits.
std::string fnv1a64_hex(std::string_view bytes);

struct ManifestEntry {
  Role role;
  std::string path;
  FeatureFormat format;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::string checksum;
};

struct DatasetBundle {
  FeatureMatrix train;
  FeatureMatrix test;
  FeatureMatrix gen;
  std::vector<ManifestEntry> manifest;
};

// Reads the three splits, tags their roles and checks they share d.
DatasetBundle load_bundle(const std::filesystem::path& train,
                          const std::filesystem::path& test,
                          const std::filesystem::path& gen);

nlohmann::json manifest_json(const std::vector<ManifestEntry>& manifest);
nlohmann::json config_json(const EvalOptions& options);
nlohmann::json report_json(const MetricReport& report);
nlohmann::json fld_json(const FldResult& result);
nlohmann::json baselines_json(const BaselineReport& report);

// Serializes JSON with every floating-point number printed with 17
// significant digits (non-finite values become null). Output is
// deterministic: object keys are sorted.
std::string dump_json(const nlohmann::json& doc, int indent = 2);

std::string format_double(double value);

std::string table_csv(const ExperimentTable& table);
std::string ranking_csv(const SampleRanking& ranking, const FeatureMatrix& gen,
                        std::size_t top);

}  // namespace fld
