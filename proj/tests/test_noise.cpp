#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "dapmlm/noise.hpp"

using namespace dapmlm;

TEST_CASE("privacy budget rejects non-positive epsilon") {
  CHECK_THROWS_AS(PrivacyBudget(0.0), std::invalid_argument);
  CHECK_THROWS_AS(PrivacyBudget(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(PrivacyBudget(std::nan("")), std::invalid_argument);
  CHECK(PrivacyBudget(0.01).epsilon() == 0.01);
}

TEST_CASE("sensitivity and scale validation") {
  CHECK_THROWS_AS(Sensitivity(-0.1), std::invalid_argument);
  CHECK(Sensitivity(0.0).value() == 0.0);
  CHECK_THROWS_AS(LaplaceScale(-1.0), std::invalid_argument);
  CHECK(LaplaceScale(0.0).zero());
  // b = delta_f / epsilon
  CHECK(laplace_scale(Sensitivity(2.0), PrivacyBudget(0.5)).value() == 4.0);
}

TEST_CASE("degenerate scale cannot be sampled or evaluated") {
  NoiseSource src(1);
  CHECK_THROWS_AS(sample_laplace(LaplaceScale(0.0), src), std::domain_error);
  CHECK_THROWS_AS(laplace_density(0.0, LaplaceScale(0.0)), std::domain_error);
  CHECK_THROWS_AS(laplace_cdf(0.0, LaplaceScale(0.0)), std::domain_error);
  std::vector<double> v{1.0};
  CHECK_THROWS_AS(perturb_vector(v, LaplaceScale(0.0), src), std::domain_error);
}

TEST_CASE("density and cdf closed forms") {
  const LaplaceScale b(2.0);
  CHECK(laplace_density(0.0, b) == Catch::Approx(1.0 / 4.0));
  CHECK(laplace_cdf(0.0, b) == Catch::Approx(0.5));
  // numeric derivative of the CDF equals the density
  const double x = 1.3, h = 1e-6;
  CHECK((laplace_cdf(x + h, b) - laplace_cdf(x - h, b)) / (2 * h) ==
        Catch::Approx(laplace_density(x, b)).epsilon(1e-5));
  CHECK(laplace_cdf(-3.0, b) == Catch::Approx(0.5 * std::exp(-1.5)));
  CHECK(laplace_cdf(3.0, b) == Catch::Approx(1.0 - 0.5 * std::exp(-1.5)));
}

TEST_CASE("noise source is deterministic per seed") {
  NoiseSource a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double ua = a.uniform_signed();
    all_equal = all_equal && ua == b.uniform_signed();
    any_diff = any_diff || ua != c.uniform_signed();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform draws stay inside the open interval") {
  NoiseSource src(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = src.uniform_signed();
    CHECK(u > -0.5);
    CHECK(u < 0.5);
  }
}

TEST_CASE("split derives independent labeled substreams") {
  const NoiseSource root(5);
  NoiseSource a = root.split("alpha"), a2 = root.split("alpha");
  NoiseSource b = root.split("beta");
  CHECK(a.seed() == a2.seed());
  CHECK(a.seed() != b.seed());
  CHECK(a.uniform_signed() == a2.uniform_signed());
}

TEST_CASE("laplace sample moments at a modest draw count") {
  NoiseSource src(11);
  const double b = 1.5;
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_laplace(LaplaceScale(b), src);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02 * b);
  CHECK(var == Catch::Approx(2.0 * b * b).epsilon(0.05));
}

TEST_CASE("perturb_vector adds independent noise per component") {
  NoiseSource src(3);
  const std::vector<double> v{1.0, 2.0, 3.0};
  const auto out = perturb_vector(v, LaplaceScale(1.0), src);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] != v[i]);
  CHECK(out[0] - v[0] != out[1] - v[1]);
}

TEST_CASE("perturb_vector rejects non-finite input") {
  NoiseSource src(3);
  const std::vector<double> v{1.0, std::nan("")};
  CHECK_THROWS_AS(perturb_vector(v, LaplaceScale(1.0), src), std::invalid_argument);
}

TEST_CASE("fnv1a64 matches reference vectors") {
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
