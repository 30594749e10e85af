#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "advaug/data.hpp"
#include "advaug/errors.hpp"

using namespace advaug;

namespace {

std::string tmp(const std::string& name) {
  std::filesystem::create_directories(ADVAUG_TEST_TMP);
  return (std::filesystem::path(ADVAUG_TEST_TMP) / name).string();
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class T>
void put(std::vector<char>& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));  // host is little-endian
  out.insert(out.end(), b, b + sizeof(T));
}

}  // namespace

TEST_CASE("identity shift is deterministic and byte-identical") {
  DomainSpec spec;
  spec.seed = 11;
  const Dataset a = generate(spec), b = generate(spec);
  CHECK(a == b);
  CHECK(encode_dataset(a) == encode_dataset(b));
  write_dataset(tmp("id_a.bin"), a);
  write_dataset(tmp("id_b.bin"), b);
  CHECK(slurp(tmp("id_a.bin")) == slurp(tmp("id_b.bin")));

  spec.seed = 12;
  CHECK_FALSE(generate(spec) == a);
}

TEST_CASE("rotation by a full turn is the identity up to rounding") {
  for (auto gen : {Generator::GaussianMixture, Generator::TwoMoons, Generator::Rings}) {
    DomainSpec spec;
    spec.generator = gen;
    spec.num_classes = gen == Generator::TwoMoons ? 2 : 3;
    spec.num_samples = 200;
    spec.seed = 4;
    const Dataset base = generate(spec);
    spec.shift.rotation = 2.0 * std::numbers::pi;
    const Dataset turned = generate(spec);
    REQUIRE(turned.size() == base.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(turned.examples[i].label == base.examples[i].label);
      // Both sides are f32-rounded; allow one float ulp at this magnitude.
      worst = std::max(worst, (turned.examples[i].x - base.examples[i].x).cwiseAbs().maxCoeff() /
                                  (1.0 + base.examples[i].x.cwiseAbs().maxCoeff()));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("rotation is exact before the float rounding") {
  // A quarter turn maps (x0, x1) to (-x1, x0); with cos = 6e-17 the swap is exact in f32.
  DomainSpec spec;
  spec.num_samples = 300;
  spec.seed = 6;
  const Dataset base = generate(spec);
  spec.shift.rotation = std::numbers::pi / 2;
  const Dataset q = generate(spec);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(std::abs(q.examples[i].x(0) + base.examples[i].x(1)) <= 1e-12 + 1e-6 * std::abs(base.examples[i].x(1)));
    CHECK(std::abs(q.examples[i].x(1) - base.examples[i].x(0)) <= 1e-12 + 1e-6 * std::abs(base.examples[i].x(0)));
  }
}

TEST_CASE("class balance and shift-independent labels") {
  DomainSpec spec;
  spec.num_classes = 2;
  spec.num_samples = 1000;
  const Dataset ds = generate(spec);
  std::size_t counts[2] = {0, 0};
  for (const auto& ex : ds.examples) ++counts[ex.label];
  CHECK(counts[0] == 500);
  CHECK(counts[1] == 500);

  spec.num_classes = 3;
  spec.num_samples = 301;
  const Dataset plain = generate(spec);
  spec.shift.rotation = 0.7;
  spec.shift.scale = 1.3;
  spec.shift.translation = Vector::Constant(2, 0.5);
  spec.shift.feature_noise = 0.2;
  const Dataset shifted = generate(spec);
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(plain.examples[i].label == shifted.examples[i].label);
}

TEST_CASE("features are float-representable") {
  DomainSpec spec;
  spec.dim = 4;
  spec.shift.feature_noise = 0.3;
  for (const auto& ex : generate(spec).examples)
    for (double v : ex.x) CHECK(static_cast<double>(static_cast<float>(v)) == v);
}

TEST_CASE("binary format is byte-exact") {
  Dataset ds;
  ds.dim = 2;
  ds.num_classes = 3;
  LabeledExample a, b;
  a.x = Vector(2);
  a.x << 1.0, -2.5;
  a.label = 2;
  b.x = Vector(2);
  b.x << 0.25, 0.0;
  b.label = 0;
  ds.examples = {a, b};

  std::vector<char> expect{'A', 'D', 'D', 'S'};
  put<std::uint32_t>(expect, 1);
  put<std::uint64_t>(expect, 2);
  put<std::uint32_t>(expect, 2);
  put<std::uint32_t>(expect, 3);
  for (float f : {1.0f, -2.5f, 0.25f, 0.0f}) put(expect, f);
  put<std::uint16_t>(expect, 2);
  put<std::uint16_t>(expect, 0);
  CHECK(encode_dataset(ds) == expect);
  CHECK(expect.size() == 24 + 2 * (4 * 2 + 2));
  CHECK(decode_dataset(expect) == ds);
}

TEST_CASE("round trips") {
  for (std::size_t n : {0u, 1u, 7u, 500u}) {
    DomainSpec spec;
    spec.generator = Generator::Rings;
    spec.num_classes = 4;
    spec.dim = 3;
    spec.num_samples = n;
    const Dataset ds = generate(spec);
    write_dataset(tmp("rt.bin"), ds);
    CHECK(read_dataset(tmp("rt.bin")) == ds);
    write_csv(tmp("rt.csv"), ds);
    CHECK(read_csv(tmp("rt.csv"), 4) == ds);
  }
  DomainSpec spec;
  spec.num_samples = 30;
  const Dataset ds = generate(spec);
  write_csv(tmp("infer.csv"), ds);
  CHECK(read_csv(tmp("infer.csv")).num_classes == 3);
}

TEST_CASE("corrupt dataset files") {
  DomainSpec spec;
  spec.num_samples = 10;
  const std::vector<char> good = encode_dataset(generate(spec));

  std::vector<char> bad = good;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_dataset(bad), doctest::Contains("magic"), FormatError);

  bad = good;
  bad[4] = 2;
  CHECK_THROWS_WITH_AS(decode_dataset(bad), doctest::Contains("version 2"), FormatError);

  bad = good;
  bad.resize(good.size() - 3);
  const std::string msg = "expected " + std::to_string(good.size()) + " bytes for n = 10, d = 2, got " +
                          std::to_string(good.size() - 3);
  CHECK_THROWS_WITH_AS(decode_dataset(bad), doctest::Contains(msg.c_str()), FormatError);

  bad = good;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  bad = good;
  bad.resize(10);
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  // Absurd n must not allocate.
  bad = good;
  for (int i = 8; i < 16; ++i) bad[i] = static_cast<char>(0xff);
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  // Label out of range.
  bad = good;
  bad[bad.size() - 2] = 9;
  CHECK_THROWS_WITH_AS(decode_dataset(bad), doctest::Contains("out of range"), FormatError);

  CHECK_THROWS_AS(read_dataset(tmp("does_not_exist.bin")), FormatError);
}

TEST_CASE("csv errors") {
  auto write = [](const std::string& name, const std::string& text) {
    std::ofstream(tmp(name)) << text;
    return tmp(name);
  };
  CHECK_THROWS_AS(read_csv(write("empty.csv", "")), FormatError);
  CHECK_THROWS_AS(read_csv(write("nolabel.csv", "f0,f1\n1,2\n")), FormatError);
  CHECK_THROWS_AS(read_csv(write("badcol.csv", "f0,g1,label\n1,2,0\n")), FormatError);
  CHECK_THROWS_WITH_AS(read_csv(write("short.csv", "f0,f1,label\n1,2,0\n1,0\n")), doctest::Contains("row 3"),
                       FormatError);
  CHECK_THROWS_AS(read_csv(write("junk.csv", "f0,f1,label\n1,x,0\n")), FormatError);
  CHECK_THROWS_AS(read_csv(write("range.csv", "f0,f1,label\n1,2,5\n"), 3), FormatError);
  const Dataset ok = read_csv(write("ok.csv", "f0,f1,label\n1.5,-2,1\n\n0,0,0\n"));
  CHECK(ok.size() == 2);
  CHECK(ok.num_classes == 2);
  CHECK(ok.examples[0].x(0) == 1.5);
}

TEST_CASE("spec validation") {
  DomainSpec spec;
  CHECK_NOTHROW(validate(spec));
  auto bad = [](auto mutate) {
    DomainSpec s;
    mutate(s);
    return s;
  };
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.num_classes = 1; })), std::invalid_argument);
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.dim = 1; })), std::invalid_argument);
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.generator = Generator::TwoMoons; })), std::invalid_argument);
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.shift.scale = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.shift.feature_noise = -1.0; })), std::invalid_argument);
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.shift.rotation = NAN; })), std::invalid_argument);
  CHECK_THROWS_AS(generate(bad([](DomainSpec& s) { s.shift.translation = Vector::Zero(3); })),
                  std::invalid_argument);
  CHECK(generator_from_string("two_moons") == Generator::TwoMoons);
  CHECK(to_string(Generator::Rings) == "rings");
  CHECK_THROWS_AS(generator_from_string("spiral"), std::invalid_argument);
}

TEST_CASE("generators produce separable-looking clouds") {
  // Class means differ; a nearest-mean rule beats chance by a wide margin on unshifted data.
  for (auto gen : {Generator::GaussianMixture, Generator::Rings}) {
    DomainSpec spec;
    spec.generator = gen;
    spec.num_samples = 600;
    const Dataset ds = generate(spec);
    CHECK(ds.size() == 600);
    CHECK(ds.dim == 2);
    for (const auto& ex : ds.examples) CHECK(ex.x.allFinite());
  }
  DomainSpec spec;
  spec.num_samples = 600;
  const Dataset ds = generate(spec);
  std::vector<Vector> mean(3, Vector::Zero(2));
  for (const auto& ex : ds.examples) mean[ex.label] += ex.x / 200.0;
  std::size_t hits = 0;
  for (const auto& ex : ds.examples) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k)
      if ((ex.x - mean[k]).norm() < (ex.x - mean[best]).norm()) best = k;
    hits += best == ex.label;
  }
  CHECK(hits > 500);
}
