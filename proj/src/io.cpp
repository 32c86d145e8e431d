#include "cam/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "cam/error.hpp"

namespace cam {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  append_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (pos_ + n > data_.size())
      throw Error(ErrorCode::kFormatError,
                  path_ + ": truncated while reading " + std::string(what) +
                      " at byte offset " + std::to_string(pos_));
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kFormatError, path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string data = ss.str();
  if (data.empty()) throw Error(ErrorCode::kEmptyFile, path + ": file is empty");
  return data;
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::kFormatError, path + ": cannot open for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kFormatError, path + ": write failed");
}

}  // namespace

void save_camf(const EmbeddingSet& set, const std::string& path) {
  set.validate();
  std::string out;
  out.reserve(17 + static_cast<std::size_t>(set.size() * (set.dim() + 1)) * 4);
  out += "CAMF";
  append_u32(out, kCamfVersion);
  append_u32(out, static_cast<std::uint32_t>(set.size()));
  append_u32(out, static_cast<std::uint32_t>(set.dim()));
  out.push_back(set.normalized ? 1 : 0);
  for (Index i = 0; i < set.size(); ++i)
    for (Index j = 0; j < set.dim(); ++j) append_f32(out, set.features(j, i));
  for (Index i = 0; i < set.size(); ++i)
    append_u32(out, static_cast<std::uint32_t>(
                        set.labels[static_cast<std::size_t>(i)]));
  append_u32(out, static_cast<std::uint32_t>(set.class_names.size()));
  for (const auto& name : set.class_names) {
    append_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
  }
  write_file(path, out);
}

EmbeddingSet load_camf(const std::string& path, bool normalize) {
  const std::string data = read_file(path);
  Reader r(data, path);
  if (r.bytes(4, "magic") != "CAMF")
    throw Error(ErrorCode::kFormatError,
                path + ": bad magic at byte offset 0, expected \"CAMF\"");
  const std::uint32_t version = r.u32("version");
  if (version != kCamfVersion)
    throw Error(ErrorCode::kFormatError,
                path + ": unsupported version " + std::to_string(version) +
                    " at byte offset 4");
  const std::uint32_t n = r.u32("sample count");
  const std::uint32_t d = r.u32("dimension");
  const std::uint8_t normalized = r.u8("normalized flag");
  if (normalized > 1)
    throw Error(ErrorCode::kFormatError,
                path + ": normalized flag must be 0 or 1 at byte offset 16");

  EmbeddingSet set;
  set.features.resize(static_cast<Index>(d), static_cast<Index>(n));
  set.normalized = normalized == 1;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) {
      const std::size_t at = r.offset();
      const float v = r.f32("feature");
      if (!std::isfinite(v))
        throw Error(ErrorCode::kFormatError,
                    path + ": non-finite feature at row " + std::to_string(i) +
                        ", column " + std::to_string(j) + " (byte offset " +
                        std::to_string(at) + ")");
      set.features(static_cast<Index>(j), static_cast<Index>(i)) = v;
    }
  set.labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    set.labels.push_back(static_cast<std::int32_t>(r.u32("label")));
  const std::uint32_t classes = r.u32("class count");
  for (std::uint32_t y = 0; y < classes; ++y) {
    const std::uint32_t len = r.u32("class-name length");
    set.class_names.push_back(r.bytes(len, "class name"));
  }
  if (!r.done())
    throw Error(ErrorCode::kFormatError,
                path + ": trailing bytes at offset " + std::to_string(r.offset()));
  set.validate();
  if (normalize) set.l2_normalize();
  return set;
}

void save_csv(const EmbeddingSet& set, const std::string& path) {
  set.validate();
  std::string out = "label";
  for (Index j = 0; j < set.dim(); ++j) out += ",f" + std::to_string(j);
  out += "\n";
  char buf[64];
  for (Index i = 0; i < set.size(); ++i) {
    out += std::to_string(set.labels[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < set.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.9g",
                    static_cast<double>(set.features(j, i)));
      out += buf;
    }
    out += "\n";
  }
  write_file(path, out);
}

EmbeddingSet load_csv(const std::string& path, bool normalize) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::kEmptyFile, path + ": no header line");
  if (line.rfind("label", 0) != 0)
    throw Error(ErrorCode::kFormatError,
                path + ": header must start with \"label\", got \"" + line + "\"");
  Index dim = 0;
  for (char ch : line)
    if (ch == ',') ++dim;

  std::vector<std::int32_t> labels;
  std::vector<float> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t start = 0;
    Index field = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      const std::string token = line.substr(start, end - start);
      char* rest = nullptr;
      if (field == 0) {
        const long v = std::strtol(token.c_str(), &rest, 10);
        if (rest == token.c_str() || *rest != '\0')
          throw Error(ErrorCode::kFormatError,
                      path + ": bad label \"" + token + "\" at row " +
                          std::to_string(row));
        labels.push_back(static_cast<std::int32_t>(v));
      } else {
        const float v = std::strtof(token.c_str(), &rest);
        if (rest == token.c_str() || *rest != '\0')
          throw Error(ErrorCode::kFormatError,
                      path + ": bad value \"" + token + "\" at row " +
                          std::to_string(row) + ", column " +
                          std::to_string(field - 1));
        if (!std::isfinite(v))
          throw Error(ErrorCode::kFormatError,
                      path + ": non-finite feature at row " + std::to_string(row) +
                          ", column " + std::to_string(field - 1));
        values.push_back(v);
      }
      ++field;
      start = end + 1;
      if (end == line.size()) break;
    }
    if (field != dim + 1)
      throw Error(ErrorCode::kFormatError,
                  path + ": row " + std::to_string(row) + " has " +
                      std::to_string(field) + " fields, expected " +
                      std::to_string(dim + 1));
    ++row;
  }
  if (row == 0) throw Error(ErrorCode::kEmptyFile, path + ": no data rows");

  EmbeddingSet set;
  set.features.resize(dim, static_cast<Index>(row));
  for (Index i = 0; i < static_cast<Index>(row); ++i)
    for (Index j = 0; j < dim; ++j)
      set.features(j, i) = values[static_cast<std::size_t>(i * dim + j)];
  set.labels = std::move(labels);
  const std::int32_t max_label =
      *std::max_element(set.labels.begin(), set.labels.end());
  for (std::int32_t y = 0; y <= max_label; ++y)
    set.class_names.push_back("class_" + std::to_string(y));
  set.normalized = false;
  set.validate();
  if (normalize) set.l2_normalize();
  return set;
}

EmbeddingSet load_embeddings(const std::string& path, bool normalize) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return load_csv(path, normalize);
  return load_camf(path, normalize);
}

}  // namespace cam
