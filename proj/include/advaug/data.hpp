#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advaug/net.hpp"

namespace advaug {

struct Dataset {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<LabeledExample> examples;

  std::size_t size() const { return examples.size(); }
  friend bool operator==(const Dataset& a, const Dataset& b);
};

enum class Generator { GaussianMixture, TwoMoons, Rings };
std::string_view to_string(Generator g);
Generator generator_from_string(std::string_view name);

// Covariate shift applied in input space after labels are drawn:
//   x <- scale * R(rotation) x + translation + N(0, feature_noise^2 I),
// with R rotating the (x0, x1) plane. {0, 0, 1, 0} is the identity.
struct Shift {
  double rotation = 0.0;
  Vector translation;  // empty means zero
  double scale = 1.0;
  double feature_noise = 0.0;
};

struct DomainSpec {
  Generator generator = Generator::GaussianMixture;
  std::size_t num_classes = 3;
  std::size_t dim = 2;
  std::size_t num_samples = 600;
  Shift shift;
  std::uint64_t seed = 0;
};

struct Severity {
  std::string_view name;
  double rotation;
};

// Rotation ladder standing in for near / mid / far target domains.
inline constexpr std::array<Severity, 3> kSeverityLadder{
    {{"near", 0.2617993877991494}, {"mid", 0.5235987755982988}, {"far", 1.0471975511965976}}};

// Throws std::invalid_argument for an invalid spec.
void validate(const DomainSpec& spec);

// Seeded and class-balanced (example i has label i mod m). Features are
// rounded to float precision so they survive the f32 dataset format exactly.
Dataset generate(const DomainSpec& spec);

// Dataset file layout (little-endian):
//   "ADDS" | u32 version = 1 | u64 n | u32 d | u32 m | f32 features[n * d] (row-major)
//   | u16 labels[n].
std::vector<char> encode_dataset(const Dataset& ds);
Dataset decode_dataset(const std::vector<char>& bytes);
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

// CSV with header f0,...,f{d-1},label.
void write_csv(const std::string& path, const Dataset& ds);
// num_classes defaults to max label + 1.
Dataset read_csv(const std::string& path, std::optional<std::size_t> num_classes = std::nullopt);

}  // namespace advaug
