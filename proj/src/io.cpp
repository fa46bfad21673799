#include "fld/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fld/errors.hpp"
#include "fld/seed.hpp"

namespace fld {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'D', '1'};
constexpr std::uint8_t kDtypeFloat32 = 0;

std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFFu));
  }
}

float load_f32_le(const unsigned char* p) {
  return std::bit_cast<float>(load_u32_le(p));
}

void store_f32_le(std::string& out, float v) {
  store_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

bool parse_number(std::string_view field, double& value) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size();
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) {
    throw FormatError("line " + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void dump_value(const nlohmann::json& v, std::string& out, int indent, int depth) {
  const auto newline = [&](int level) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_value(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out.push_back('}');
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out.push_back('[');
      bool first = true;
      for (const auto& item : v) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        dump_value(item, out, indent, depth + 1);
      }
      newline(depth);
      out.push_back(']');
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      return;
    }
    default:
      out += v.dump();
      return;
  }
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string_view to_string(FeatureFormat f) { return f == FeatureFormat::Csv ? "csv" : "fvec"; }

}  // namespace

FeatureFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? FeatureFormat::Csv : FeatureFormat::Fvec;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw FormatError("read failure on '" + path.string() + "'");
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw FormatError("write failure on '" + path.string() + "'");
}

FeatureMatrix parse_fvec(std::string_view bytes, Role role) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kFvecHeaderBytes) {
    throw FormatError("truncated FVEC header: " + std::to_string(bytes.size()) +
                      " of " + std::to_string(kFvecHeaderBytes) + " bytes (offset " +
                      std::to_string(bytes.size()) + ")");
  }
  if (std::memcmp(p, kMagic, 4) != 0) throw FormatError("bad FVEC magic at byte offset 0");
  const std::uint32_t n = load_u32_le(p + 4);
  const std::uint32_t d = load_u32_le(p + 8);
  const std::uint8_t dtype = p[12];
  if (dtype != kDtypeFloat32) {
    throw FormatError("unsupported FVEC dtype " + std::to_string(dtype) +
                      " at byte offset 12");
  }
  if (n == 0 || d == 0) {
    throw FormatError("FVEC header declares an empty matrix (n=" + std::to_string(n) +
                      ", d=" + std::to_string(d) + ") at byte offset 4");
  }
  const std::uint64_t expected =
      kFvecHeaderBytes + static_cast<std::uint64_t>(n) * d * sizeof(float);
  if (bytes.size() < expected) {
    throw FormatError("truncated FVEC payload: header promises " + std::to_string(expected) +
                      " bytes, file ends at byte offset " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw FormatError("trailing bytes after FVEC payload at byte offset " +
                      std::to_string(expected));
  }
  RowMatrix data(n, d);
  const unsigned char* payload = p + kFvecHeaderBytes;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k < d; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * d + k;
      const float v = load_f32_le(payload + idx * sizeof(float));
      if (!std::isfinite(v)) {
        throw FormatError("non-finite value at byte offset " +
                          std::to_string(kFvecHeaderBytes + idx * sizeof(float)));
      }
      data(i, k) = static_cast<double>(v);
    }
  }
  return FeatureMatrix(std::move(data), role);
}

std::string encode_fvec(const FeatureMatrix& matrix) {
  if (matrix.rows() > UINT32_MAX || matrix.dim() > UINT32_MAX) {
    throw FormatError("matrix too large for FVEC");
  }
  std::string out;
  out.reserve(kFvecHeaderBytes + matrix.rows() * matrix.dim() * sizeof(float));
  out.append(kMagic, 4);
  store_u32_le(out, static_cast<std::uint32_t>(matrix.rows()));
  store_u32_le(out, static_cast<std::uint32_t>(matrix.dim()));
  out.push_back(static_cast<char>(kDtypeFloat32));
  const RowMatrix& data = matrix.data();
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index k = 0; k < data.cols(); ++k) {
      store_f32_le(out, static_cast<float>(data(i, k)));
    }
  }
  return out;
}

FeatureMatrix parse_csv(std::string_view text, Role role) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  std::optional<bool> has_ids;
  bool header_checked = false;
  std::size_t width = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string> fields = split_record(line, line_no);
    if (!header_checked) {
      header_checked = true;
      double probe = 0.0;
      if (std::none_of(fields.begin(), fields.end(),
                       [&](const std::string& f) { return parse_number(f, probe); })) {
        continue;
      }
    }
    if (!has_ids) {
      double probe = 0.0;
      has_ids = !parse_number(fields.front(), probe);
    }
    const std::size_t offset = *has_ids ? 1 : 0;
    const std::size_t values = fields.size() - std::min(fields.size(), offset);
    if (rows.empty()) {
      width = values;
      if (width == 0) throw FormatError("line " + std::to_string(line_no) + ": no numeric columns");
    } else if (values != width) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " numeric fields, got " +
                        std::to_string(values));
    }
    std::vector<double> row(width);
    for (std::size_t k = 0; k < width; ++k) {
      if (!parse_number(fields[k + offset], row[k])) {
        throw FormatError("line " + std::to_string(line_no) + ", field " +
                          std::to_string(k + offset + 1) + ": '" + fields[k + offset] +
                          "' is not a number");
      }
      if (!std::isfinite(row[k])) {
        throw FormatError("line " + std::to_string(line_no) + ": non-finite value");
      }
    }
    if (*has_ids) ids.push_back(std::move(fields.front()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("CSV contains no rows");
  RowMatrix data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return FeatureMatrix(std::move(data), role, std::move(ids));
}

std::string encode_csv(const FeatureMatrix& matrix) {
  std::string out;
  const RowMatrix& data = matrix.data();
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (matrix.has_ids()) {
      out += csv_escape(matrix.ids()[static_cast<std::size_t>(i)]);
      out.push_back(',');
    }
    for (Eigen::Index k = 0; k < data.cols(); ++k) {
      if (k > 0) out.push_back(',');
      out += format_double(data(i, k));
    }
    out.push_back('\n');
  }
  return out;
}

FeatureMatrix read_features(const std::filesystem::path& path, FeatureFormat format,
                            Role role) {
  const std::string bytes = read_file(path);
  try {
    return format == FeatureFormat::Csv ? parse_csv(bytes, role) : parse_fvec(bytes, role);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FeatureMatrix read_features(const std::filesystem::path& path, Role role) {
  return read_features(path, format_for_path(path), role);
}

void write_features(const FeatureMatrix& matrix, const std::filesystem::path& path,
                    FeatureFormat format) {
  write_file(path, format == FeatureFormat::Csv ? encode_csv(matrix) : encode_fvec(matrix));
}

void write_features(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  write_features(matrix, path, format_for_path(path));
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DatasetBundle load_bundle(const std::filesystem::path& train,
                          const std::filesystem::path& test,
                          const std::filesystem::path& gen) {
  std::vector<ManifestEntry> manifest;
  auto load = [&](const std::filesystem::path& path, Role role) {
    const FeatureFormat format = format_for_path(path);
    const std::string bytes = read_file(path);
    FeatureMatrix m = [&] {
      try {
        return format == FeatureFormat::Csv ? parse_csv(bytes, role) : parse_fvec(bytes, role);
      } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
      }
    }();
    manifest.push_back({role, path.string(), format, m.rows(), m.dim(), fnv1a64_hex(bytes)});
    return m;
  };
  FeatureMatrix tr = load(train, Role::Train);
  FeatureMatrix te = load(test, Role::Test);
  FeatureMatrix ge = load(gen, Role::Generated);
  require_same_dim(tr, te);
  require_same_dim(tr, ge);
  return {std::move(tr), std::move(te), std::move(ge), std::move(manifest)};
}

nlohmann::json manifest_json(const std::vector<ManifestEntry>& manifest) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& e : manifest) {
    out[std::string(to_string(e.role))] = {
        {"path", e.path},   {"format", std::string(to_string(e.format))},
        {"rows", e.rows},   {"dim", e.dim},
        {"fnv1a64", e.checksum}};
  }
  return out;
}

nlohmann::json config_json(const EvalOptions& o) {
  const FitConfig& f = o.fit;
  return {
      {"seed", o.seed},
      {"batching_seed", f.seed},
      {"calibration_seed", derive_seed(o.seed, SeedStream::CalibrationSplit)},
      {"standardize", o.standardize},
      {"calibration", o.calibration == CalibrationMode::Calibrate ? "train-split" : "constant"},
      {"constant", o.constant},
      {"pr_k", o.pr_k},
      {"log_delta", optional_json(o.log_delta)},
      {"fit",
       {{"lr", f.lr},
        {"epochs", f.epochs},
        {"batch_size", f.batch_size},
        {"adam_beta1", f.adam_beta1},
        {"adam_beta2", f.adam_beta2},
        {"adam_eps", f.adam_eps},
        {"base_likelihood_scale", f.base_likelihood_scale},
        {"base_rule", f.base_rule == BaseLikelihoodRule::ScaledSquaredNorm
                          ? "scaled-squared-norm"
                          : "literal-distance"},
        {"init_rule", f.init_rule == InitRule::NearestNeighborOverD ? "nearest-neighbor-over-d"
                                                                    : "constant"},
        {"init_value", f.init_value}}},
  };
}

nlohmann::json fld_json(const FldResult& r) {
  const CalibrationConstant& c = r.constant;
  return {
      {"fld_test", r.fld_test},
      {"fld_train", r.fld_train},
      {"gen_gap", r.gen_gap},
      {"overfitting", r.overfitting()},
      {"raw_nll_test", r.raw_nll_test},
      {"constant",
       {{"c_value", c.c_value},
        {"method", c.method == CalibrationMethod::TrainSplit ? "train-split" : "none"},
        {"split_seed", c.split_seed},
        {"log_delta", optional_json(c.log_delta)},
        {"surrogate_objective", optional_json(c.surrogate_objective)},
        {"surrogate_converged", c.surrogate_converged}}},
  };
}

nlohmann::json baselines_json(const BaselineReport& b) {
  return {{"fid_train", b.fid_train}, {"fid_test", b.fid_test},
          {"fid_gap", b.fid_gap},     {"precision", b.precision},
          {"recall", b.recall},       {"c_t", b.c_t},
          {"c_t_degenerate", b.c_t_degenerate}, {"auth_pct", b.auth_pct}};
}

nlohmann::json report_json(const MetricReport& report) {
  nlohmann::json out = {
      {"format", "fld-report/1"},
      {"dim", report.dim},
      {"rows", {{"train", report.n_train}, {"test", report.n_test}, {"gen", report.n_gen}}},
      {"config", config_json(report.config)},
  };
  if (report.fld) out["fld"] = fld_json(*report.fld);
  if (report.model) {
    const Vector& lv = report.model->log_var;
    std::vector<double> sorted(lv.begin(), lv.end());
    std::sort(sorted.begin(), sorted.end());
    out["fit"] = {
        {"trace", report.model->fit_trace},
        {"log_var", {{"min", sorted.front()},
                     {"median", percentile(sorted, 50.0)},
                     {"max", sorted.back()}}},
    };
  }
  if (report.baselines) out["baselines"] = baselines_json(*report.baselines);
  if (report.memorization) {
    out["memorization"] = {
        {"log_threshold", optional_json(report.memorization->log_threshold)},
        {"flagged", report.memorization->flagged_count()},
        {"top", std::vector<std::size_t>(
                    report.memorization->order.begin(),
                    report.memorization->order.begin() +
                        static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                            10, report.memorization->order.size())))}};
  }
  if (report.config.record_timings) out["timings_ms"] = report.timings_ms;
  return out;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string dump_json(const nlohmann::json& doc, int indent) {
  std::string out;
  dump_value(doc, out, indent, 0);
  out.push_back('\n');
  return out;
}

std::string table_csv(const ExperimentTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c > 0) out.push_back(',');
    out += table.columns[c];
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out.push_back(',');
      out += std::isfinite(row[c]) ? format_double(row[c]) : "nan";
    }
    out.push_back('\n');
  }
  return out;
}

std::string ranking_csv(const SampleRanking& ranking, const FeatureMatrix& gen,
                        std::size_t top) {
  std::string out = "id,log_score,rank\n";
  const std::size_t count = top == 0 ? ranking.order.size()
                                     : std::min(top, ranking.order.size());
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t j = ranking.order[r];
    out += csv_escape(gen.id(j));
    out.push_back(',');
    out += format_double(ranking.scores(static_cast<Eigen::Index>(j)));
    out.push_back(',');
    out += std::to_string(r + 1);
    out.push_back('\n');
  }
  return out;
}

}  // namespace fld
