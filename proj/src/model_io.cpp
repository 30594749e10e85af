#include "advaug/model_io.hpp"

#include <fstream>
#include <iterator>

#include "byte_io.hpp"

namespace advaug {

namespace detail {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

}  // namespace detail

namespace {
constexpr char kMagic[4] = {'A', 'D', 'A', 'W'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<char> encode_model(const Network& net) {
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.le(kVersion);
  w.le(static_cast<std::uint32_t>(net.num_hidden() + 1));
  for (std::size_t dim : net.layer_dims()) w.le(static_cast<std::uint32_t>(dim));
  for (Activation a : net.activations()) w.le(static_cast<std::uint8_t>(a));
  for (double v : net.parameters()) w.le(v);
  return std::move(w.buffer());
}

Network decode_model(const std::vector<char>& bytes) {
  detail::ByteReader r(bytes, "model");
  if (r.bytes(4) != std::string(kMagic, 4)) throw FormatError("model: bad magic, expected ADAW");
  const auto version = r.le<std::uint32_t>();
  if (version != kVersion)
    throw FormatError("model: unsupported version " + std::to_string(version));
  const auto layer_count = r.le<std::uint32_t>();
  if (layer_count < 2 || layer_count > 1024) throw FormatError("model: bad layer count");
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i <= layer_count; ++i) dims.push_back(r.le<std::uint32_t>());
  std::vector<Activation> acts;
  for (std::uint32_t i = 0; i + 1 < layer_count; ++i) {
    const auto tag = r.le<std::uint8_t>();
    if (tag > 2) throw FormatError("model: unknown activation tag " + std::to_string(tag));
    acts.push_back(static_cast<Activation>(tag));
  }
  // Size check before allocating anything a corrupt header could make huge.
  std::uint64_t count = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) throw FormatError("model: zero layer dimension");
    count += std::uint64_t(dims[l]) * dims[l + 1] + (l + 2 < dims.size() ? dims[l + 1] : 0);
  }
  if (count > (r.size() - r.position()) / 8)
    throw FormatError("model: truncated file, expected at least " +
                      std::to_string(r.position() + count * 8) + " bytes, got " +
                      std::to_string(r.size()));
  Network net(std::move(dims), std::move(acts));
  Vector params(static_cast<Eigen::Index>(net.num_parameters()));
  for (Eigen::Index i = 0; i < params.size(); ++i) params(i) = r.le<double>();
  if (r.position() != r.size())
    throw FormatError("model: " + std::to_string(r.size() - r.position()) + " trailing bytes");
  net.set_parameters(params);
  return net;
}

void write_model(const std::string& path, const Network& net) {
  detail::write_file(path, encode_model(net));
}

Network read_model(const std::string& path) { return decode_model(detail::read_file(path)); }

}  // namespace advaug
