#include "stacktag/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stacktag/error.hpp"

namespace stacktag {

namespace {

constexpr std::string_view kMagic = "STKMODEL";

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorKind::MalformedModel, "model archive truncated");
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string ModelArchive::serialize() const {
  std::string out(kMagic);
  put_le<std::uint32_t>(out, kVersion);
  out.push_back('L');
  const std::string manifest_text = manifest.dump();
  put_le<std::uint64_t>(out, manifest_text.size());
  out += manifest_text;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    const double* data = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(data[i]));
  }
  return out;
}

ModelArchive ModelArchive::parse(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) {
    throw Error(ErrorKind::MalformedModel, "not a model archive (bad magic)");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorKind::MalformedModel,
                "unsupported archive version " + std::to_string(version));
  }
  if (in.take(1) != "L") throw Error(ErrorKind::MalformedModel, "unsupported endianness");
  ModelArchive archive;
  const auto manifest_len = in.le<std::uint64_t>();
  try {
    archive.manifest = nlohmann::json::parse(in.take(manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedModel, std::string("bad manifest: ") + e.what());
  }
  const auto count = in.le<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name(in.take(in.le<std::uint32_t>()));
    if (in.le<std::uint32_t>() != 2) {
      throw Error(ErrorKind::MalformedModel, "tensor " + name + " is not 2-dimensional");
    }
    const auto rows = in.le<std::uint64_t>();
    const auto cols = in.le<std::uint64_t>();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    double* data = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) data[i] = std::bit_cast<double>(in.le<std::uint64_t>());
    archive.tensors.emplace(name, std::move(m));
  }
  if (!in.done()) throw Error(ErrorKind::MalformedModel, "trailing bytes after tensors");
  return archive;
}

const Matrix& ModelArchive::get(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw Error(ErrorKind::ModelMissingComponent, "model archive lacks tensor " + name);
  }
  return it->second;
}

const Matrix& ModelArchive::get(const std::string& name, Eigen::Index rows,
                                Eigen::Index cols) const {
  const Matrix& m = get(name);
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorKind::MalformedModel,
                "tensor " + name + " has shape " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
  return m;
}

void ModelArchive::save_file(const std::string& path) const { write_text_file(path, serialize()); }

ModelArchive ModelArchive::load_file(const std::string& path) {
  return parse(read_text_file(path));
}

void load_params(const ModelArchive& archive, const std::string& prefix,
                 const TensorRefs& params) {
  for (Tensor* p : params) {
    p->value = archive.get(prefix + p->name, p->value.rows(), p->value.cols());
    p->grad.setZero(p->value.rows(), p->value.cols());
  }
}

void store_params(ModelArchive& archive, const std::string& prefix,
                  const ConstTensorRefs& params) {
  for (const Tensor* p : params) archive.put(prefix + p->name, p->value);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace stacktag
