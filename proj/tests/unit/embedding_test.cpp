#include <cmath>
#include <random>

#include "doctest.h"

#include "common/errors.hpp"
#include "index/embedding.hpp"

using namespace consearch;

namespace {

class FlakyProvider final : public EmbeddingProvider {
 public:
  explicit FlakyProvider(std::size_t fail_at_call) : fail_at_call_(fail_at_call) {}
  std::string id() const override { return "flaky"; }
  std::size_t dim() const override { return 4; }
  std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override {
    if (calls_++ == fail_at_call_) throw std::runtime_error("connection reset");
    return std::vector<std::vector<float>>(texts.size(), std::vector<float>{3, 0, 4, 0});
  }

 private:
  std::size_t fail_at_call_;
  std::size_t calls_ = 0;
};

std::vector<float> random_unit(std::mt19937& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double n = 0;
  for (auto& x : v) {
    x = g(rng);
    n += x * x;
  }
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / std::sqrt(n));
  return out;
}

}  // namespace

TEST_CASE("mock embedder matches the documented hashing rule") {
  // Values from tests/oracles/mock_embedder.py "abc" (dim 256, seed 0):
  //   72:-0.577350269 75:-0.577350269 86:0.577350269
  MockEmbedder mock(256, 0);
  std::vector<std::string> in{"abc"};
  const auto v = embed(in, mock).front();
  REQUIRE(v.dim() == 256);
  const float k = static_cast<float>(1.0 / std::sqrt(3.0));
  for (std::size_t i = 0; i < 256; ++i) {
    const float expected = i == 72 || i == 75 ? -k : (i == 86 ? k : 0.0f);
    CHECK(v.values()[i] == doctest::Approx(expected).epsilon(1e-7));
  }

  // "Hello, World!" with dim 64, seed 7: eleven buckets at +-1/sqrt(11).
  MockEmbedder small(64, 7);
  const auto w = embed_one("Hello, World!", small);
  const std::vector<int> pos{5, 13, 16, 23, 38, 39, 41, 54, 62};
  const std::vector<int> neg{29, 36};
  const float u = static_cast<float>(1.0 / std::sqrt(11.0));
  for (int i : pos) CHECK(w.values()[static_cast<std::size_t>(i)] == doctest::Approx(u));
  for (int i : neg) CHECK(w.values()[static_cast<std::size_t>(i)] == doctest::Approx(-u));
}

TEST_CASE("embed contract") {
  MockEmbedder mock;
  CHECK(embed(std::span<const std::string>{}, mock).empty());

  std::vector<std::string> same{"Akihabara anime shops", "Akihabara anime shops", "", "!!!"};
  const auto out = embed(same, mock);
  REQUIRE(out.size() == 4);
  CHECK(out[0] == out[1]);
  for (const auto& v : out) {
    CHECK(v.dim() == mock.dim());
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(MockEmbedder::normalize_text("Hi, THERE!") == " hi there ");
}

TEST_CASE("provider failure carries the batch offset") {
  FlakyProvider flaky(2);
  std::vector<std::string> texts(10, "x");
  try {
    embed(texts, flaky, 3);
    FAIL("expected EmbeddingError");
  } catch (const EmbeddingError& e) {
    CHECK(e.batch_offset() == 6);
    CHECK(e.retryable());
  }
  FlakyProvider ok(99);
  const auto v = embed(texts, ok, 3);
  CHECK(v[9].values()[0] == doctest::Approx(0.6));
}

TEST_CASE("cosine") {
  std::mt19937 rng(11);
  const auto v = random_unit(rng, 64);
  CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<float> e0{1, 0, 0};
  std::vector<float> e1{0, 1, 0};
  CHECK(cosine(e0, e1) == 0.0);

  for (int i = 0; i < 100; ++i) {
    const auto a = random_unit(rng, 384);
    const auto b = random_unit(rng, 384);
    double dot = 0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += double(a[k]) * double(b[k]);
    const double c = cosine(a, b);
    CHECK(c == doctest::Approx(dot).epsilon(1e-6));
    CHECK(c == cosine(b, a));
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }

  std::vector<float> short_v{1, 2};
  CHECK_THROWS_AS(cosine(e0, short_v), std::invalid_argument);
}
