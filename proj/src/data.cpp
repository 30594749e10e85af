#include "advaug/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "advaug/errors.hpp"
#include "advaug/rng.hpp"
#include "byte_io.hpp"

namespace advaug {

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.dim != b.dim || a.num_classes != b.num_classes || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.examples[i].label != b.examples[i].label || a.examples[i].x != b.examples[i].x) return false;
  return true;
}

std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::GaussianMixture: return "gaussian_mixture";
    case Generator::TwoMoons: return "two_moons";
    case Generator::Rings: return "rings";
  }
  return "unknown";
}

Generator generator_from_string(std::string_view name) {
  if (name == "gaussian_mixture") return Generator::GaussianMixture;
  if (name == "two_moons") return Generator::TwoMoons;
  if (name == "rings") return Generator::Rings;
  throw std::invalid_argument("unknown generator '" + std::string(name) + "'");
}

void validate(const DomainSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("domain spec: need at least 2 classes");
  if (spec.num_classes > 65535) throw std::invalid_argument("domain spec: too many classes");
  if (spec.dim < 2) throw std::invalid_argument("domain spec: dimension must be at least 2");
  if (spec.generator == Generator::TwoMoons && spec.num_classes != 2)
    throw std::invalid_argument("domain spec: two_moons has exactly 2 classes");
  if (!(spec.shift.scale > 0.0) || !std::isfinite(spec.shift.scale))
    throw std::invalid_argument("domain spec: shift scale must be positive");
  if (!(spec.shift.feature_noise >= 0.0))
    throw std::invalid_argument("domain spec: feature noise must be nonnegative");
  if (!std::isfinite(spec.shift.rotation))
    throw std::invalid_argument("domain spec: rotation must be finite");
  if (spec.shift.translation.size() != 0 &&
      static_cast<std::size_t>(spec.shift.translation.size()) != spec.dim)
    throw std::invalid_argument("domain spec: translation must have the data dimension");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kShiftStream = 0x9E3779B97F4A7C15ULL;

// Base point in the (x0, x1) plane for a given class.
std::array<double, 2> base_point(const DomainSpec& spec, std::size_t label, Rng& rng) {
  const double m = static_cast<double>(spec.num_classes);
  const double k = static_cast<double>(label);
  switch (spec.generator) {
    case Generator::GaussianMixture: {
      // Means on a circle of radius 3; clusters stretched along the tangent.
      const double angle = kTwoPi * k / m;
      const double radial = 0.5 * rng.normal();
      const double tangential = 1.0 * rng.normal();
      const double c = std::cos(angle), s = std::sin(angle);
      return {(3.0 + radial) * c - tangential * s, (3.0 + radial) * s + tangential * c};
    }
    case Generator::TwoMoons: {
      const double t = std::numbers::pi * rng.uniform01();
      const double nx = 0.1 * rng.normal(), ny = 0.1 * rng.normal();
      if (label == 0) return {2.0 * (std::cos(t) - 0.5) + nx, 2.0 * (std::sin(t) - 0.25) + ny};
      return {2.0 * (0.5 - std::cos(t)) + nx, 2.0 * (0.25 - std::sin(t)) + ny};
    }
    case Generator::Rings: {
      const double angle = kTwoPi * rng.uniform01();
      const double radius = 1.5 * (k + 1.0) + 0.2 * rng.normal();
      return {radius * std::cos(angle), radius * std::sin(angle)};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

Dataset generate(const DomainSpec& spec) {
  validate(spec);
  Dataset ds;
  ds.dim = spec.dim;
  ds.num_classes = spec.num_classes;
  ds.examples.reserve(spec.num_samples);

  // Base points and shift noise come from separate streams so the unshifted
  // cloud does not depend on the shift parameters.
  Rng base_rng(spec.seed);
  Rng shift_rng(spec.seed ^ kShiftStream);
  const double c = std::cos(spec.shift.rotation), s = std::sin(spec.shift.rotation);
  const auto d = static_cast<Eigen::Index>(spec.dim);

  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    LabeledExample ex;
    ex.label = i % spec.num_classes;
    ex.x.resize(d);
    const auto [b0, b1] = base_point(spec, ex.label, base_rng);
    ex.x(0) = b0;
    ex.x(1) = b1;
    for (Eigen::Index j = 2; j < d; ++j) ex.x(j) = 0.5 * base_rng.normal();

    const double r0 = c * ex.x(0) - s * ex.x(1);
    const double r1 = s * ex.x(0) + c * ex.x(1);
    ex.x(0) = r0;
    ex.x(1) = r1;
    ex.x *= spec.shift.scale;
    if (spec.shift.translation.size() != 0) ex.x += spec.shift.translation;
    if (spec.shift.feature_noise > 0.0)
      for (Eigen::Index j = 0; j < d; ++j) ex.x(j) += spec.shift.feature_noise * shift_rng.normal();
    for (Eigen::Index j = 0; j < d; ++j) ex.x(j) = static_cast<double>(static_cast<float>(ex.x(j)));
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

namespace {
constexpr char kMagic[4] = {'A', 'D', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 24;
}  // namespace

std::vector<char> encode_dataset(const Dataset& ds) {
  if (ds.num_classes > 65536) throw FormatError("dataset: labels do not fit u16");
  detail::ByteWriter w;
  w.bytes(kMagic, 4);
  w.le(kVersion);
  w.le(static_cast<std::uint64_t>(ds.size()));
  w.le(static_cast<std::uint32_t>(ds.dim));
  w.le(static_cast<std::uint32_t>(ds.num_classes));
  for (const auto& ex : ds.examples) {
    if (static_cast<std::size_t>(ex.x.size()) != ds.dim) throw DimensionError("dataset: ragged rows");
    for (double v : ex.x) w.le(static_cast<float>(v));
  }
  for (const auto& ex : ds.examples) w.le(static_cast<std::uint16_t>(ex.label));
  return std::move(w.buffer());
}

Dataset decode_dataset(const std::vector<char>& bytes) {
  detail::ByteReader r(bytes, "dataset");
  if (r.bytes(4) != std::string(kMagic, 4)) throw FormatError("dataset: bad magic, expected ADDS");
  const auto version = r.le<std::uint32_t>();
  if (version != kVersion)
    throw FormatError("dataset: unsupported version " + std::to_string(version));
  Dataset ds;
  const auto n = r.le<std::uint64_t>();
  ds.dim = r.le<std::uint32_t>();
  ds.num_classes = r.le<std::uint32_t>();
  const unsigned __int128 expected =
      static_cast<unsigned __int128>(kHeaderBytes) +
      static_cast<unsigned __int128>(n) * (4 * static_cast<unsigned __int128>(ds.dim) + 2);
  if (expected != bytes.size()) {
    const auto shown = expected > static_cast<unsigned __int128>(UINT64_MAX)
                           ? std::string("more than 2^64")
                           : std::to_string(static_cast<std::uint64_t>(expected));
    throw FormatError("dataset: expected " + shown + " bytes for n = " + std::to_string(n) +
                      ", d = " + std::to_string(ds.dim) + ", got " + std::to_string(bytes.size()));
  }
  ds.examples.resize(static_cast<std::size_t>(n));
  for (auto& ex : ds.examples) {
    ex.x.resize(static_cast<Eigen::Index>(ds.dim));
    for (Eigen::Index j = 0; j < ex.x.size(); ++j) ex.x(j) = static_cast<double>(r.le<float>());
  }
  for (auto& ex : ds.examples) {
    ex.label = r.le<std::uint16_t>();
    if (ex.label >= ds.num_classes)
      throw FormatError("dataset: label " + std::to_string(ex.label) + " out of range");
  }
  return ds;
}

void write_dataset(const std::string& path, const Dataset& ds) {
  detail::write_file(path, encode_dataset(ds));
}

Dataset read_dataset(const std::string& path) { return decode_dataset(detail::read_file(path)); }

void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < ds.dim; ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[64];
  for (const auto& ex : ds.examples) {
    for (double v : ex.x) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << ex.label << '\n';
  }
}

Dataset read_csv(const std::string& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: missing header");
  Dataset ds;
  {
    std::stringstream header(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(header, cell, ',')) cols.push_back(cell);
    if (cols.size() < 2 || cols.back() != "label") throw FormatError("csv: header must end with 'label'");
    for (std::size_t j = 0; j + 1 < cols.size(); ++j)
      if (cols[j] != "f" + std::to_string(j)) throw FormatError("csv: unexpected column '" + cols[j] + "'");
    ds.dim = cols.size() - 1;
  }
  std::size_t max_label = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    LabeledExample ex;
    ex.x.resize(static_cast<Eigen::Index>(ds.dim));
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t j = 0; j <= ds.dim; ++j) {
      const char* stop = std::find(p, end, ',');
      std::from_chars_result res;
      if (j < ds.dim) {
        double v = 0.0;
        res = std::from_chars(p, stop, v);
        ex.x(static_cast<Eigen::Index>(j)) = v;
      } else {
        res = std::from_chars(p, stop, ex.label);
      }
      if (res.ec != std::errc() || res.ptr != stop || (j < ds.dim && stop == end))
        throw FormatError("csv: malformed row " + std::to_string(row));
      p = stop == end ? end : stop + 1;
    }
    max_label = std::max(max_label, ex.label);
    ds.examples.push_back(std::move(ex));
  }
  ds.num_classes = num_classes.value_or(ds.examples.empty() ? 0 : max_label + 1);
  for (const auto& ex : ds.examples)
    if (ex.label >= ds.num_classes) throw FormatError("csv: label out of range");
  return ds;
}

}  // namespace advaug
