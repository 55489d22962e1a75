#pragma once

#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stacktag/nn.hpp"

namespace stacktag {

// Binary model archive. Layout, all integers little-endian:
//
//   "STKMODEL"                     8-byte magic
//   u32 version                    currently 1
//   u8  endianness                 'L'
//   u64 manifest length, bytes     UTF-8 JSON manifest
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 ndim (=2),
//               u64 rows, u64 cols, rows*cols IEEE-754 f64 (column-major)
//
// Doubles are stored bit for bit, so save/load round trips exactly.
struct ModelArchive {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json manifest = nlohmann::json::object();
  std::map<std::string, Matrix> tensors;

  std::string serialize() const;
  static ModelArchive parse(std::string_view bytes);

  void put(const std::string& name, const Matrix& m) { tensors[name] = m; }
  // Throws ModelMissingComponent if absent, MalformedModel on shape mismatch
  // when an expected shape is given.
  const Matrix& get(const std::string& name) const;
  const Matrix& get(const std::string& name, Eigen::Index rows, Eigen::Index cols) const;

  void save_file(const std::string& path) const;
  static ModelArchive load_file(const std::string& path);
};

// Copies every named tensor value from the archive into `params`.
void load_params(const ModelArchive& archive, const std::string& prefix, const TensorRefs& params);
void store_params(ModelArchive& archive, const std::string& prefix,
                  const ConstTensorRefs& params);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace stacktag
