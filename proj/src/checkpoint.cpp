#include "bunca/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bunca/error.hpp"

namespace bunca {

namespace {

constexpr char kMagic[4] = {'B', 'N', 'C', 'A'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& params) {
  std::vector<std::uint8_t> out;
  out.push_back(kCheckpointVersion);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    const Matrix& v = e.tensor.value();
    put_u64(out, static_cast<std::uint64_t>(v.rows()));
    put_u64(out, static_cast<std::uint64_t>(v.cols()));
    for (Index i = 0; i < v.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(v.data()[i]));
  }
  return out;
}

ParameterSet decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  const auto version = in.u8("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
  }
  if (in.str(4, "magic") != std::string(kMagic, 4)) throw FormatError("checkpoint magic mismatch");
  const auto count = in.u32("tensor count");
  ParameterSet params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = in.u32("name length");
    std::string name = in.str(len, "name");
    const auto rows = in.u64("rows");
    const auto cols = in.u64("cols");
    if (rows != 0 && cols > (std::uint64_t{1} << 40) / rows) throw FormatError("tensor '" + name + "' too large");
    in.need(rows * cols * 8, "tensor values");
    Matrix v(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = std::bit_cast<double>(in.u64("value"));
    try {
      params.add(std::move(name), Tensor::parameter(std::move(v)));
    } catch (const ConfigError& e) {
      throw FormatError(e.what());
    }
  }
  if (!in.done()) throw FormatError("trailing bytes after last checkpoint tensor");
  return params;
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to checkpoint " + path.string());
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void assign_parameters(const ParameterSet& target, const ParameterSet& source) {
  for (const auto& e : source) {
    if (!target.contains(e.name)) throw FormatError("unknown tensor name '" + e.name + "' in checkpoint");
  }
  for (const auto& e : target) {
    const Tensor& src = source.get(e.name);
    if (src.rows() != e.tensor.rows() || src.cols() != e.tensor.cols()) {
      throw DimensionError("tensor '" + e.name + "' has shape " + std::to_string(src.rows()) + "x" +
                           std::to_string(src.cols()) + ", expected " + std::to_string(e.tensor.rows()) +
                           "x" + std::to_string(e.tensor.cols()));
    }
    Tensor dst = e.tensor;
    dst.mutable_value() = src.value();
  }
}

}  // namespace bunca
