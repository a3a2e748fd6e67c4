#pragma once

// Seedable Laplace mechanism: privacy budget, sensitivity, noise scale
// calibration and reproducible sampling.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dapmlm {

// FNV-1a over arbitrary bytes, used for seed derivation and payload digests.
// std::hash is implementation-defined, this is not.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t state = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t state) {
  for (int i = 0; i < 8; ++i) {
    state ^= static_cast<unsigned char>(v >> (8 * i));
    state *= 0x100000001b3ULL;
  }
  return state;
}

class PrivacyBudget {
 public:
  explicit PrivacyBudget(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw std::invalid_argument("privacy budget must be a positive finite value");
  }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

class Sensitivity {
 public:
  explicit Sensitivity(double delta_f) : delta_f_(delta_f) {
    if (!(delta_f >= 0.0) || !std::isfinite(delta_f))
      throw std::invalid_argument("sensitivity must be non-negative and finite");
  }
  double value() const { return delta_f_; }

 private:
  double delta_f_;
};

// Noise scale b = delta_f / epsilon. A zero scale is representable (zero
// sensitivity) but cannot be sampled from; callers must branch to identity.
class LaplaceScale {
 public:
  explicit LaplaceScale(double scale) : scale_(scale) {
    if (!(scale >= 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("laplace scale must be non-negative and finite");
  }
  double value() const { return scale_; }
  bool zero() const { return scale_ == 0.0; }

 private:
  double scale_;
};

inline LaplaceScale laplace_scale(const Sensitivity& sensitivity,
                                  const PrivacyBudget& budget) {
  return LaplaceScale(sensitivity.value() / budget.epsilon());
}

inline double laplace_density(double x, const LaplaceScale& scale) {
  if (scale.zero()) throw std::domain_error("degenerate distribution");
  const double b = scale.value();
  return std::exp(-std::abs(x) / b) / (2.0 * b);
}

inline double laplace_cdf(double x, const LaplaceScale& scale) {
  if (scale.zero()) throw std::domain_error("degenerate distribution");
  const double b = scale.value();
  return x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

// Deterministic random source. mt19937_64 output is specified bit-exactly,
// and the uniform mapping below avoids std::uniform_real_distribution, whose
// results vary between standard libraries. Sub-streams for independent
// parties are derived by hashing the parent seed with a label.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform on the open interval (-1/2, 1/2); endpoints are unreachable.
  double uniform_signed() {
    const double u01 =
        (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return u01 - 0.5;
  }

  NoiseSource split(std::string_view label) const {
    return NoiseSource(fnv1a64(label, fnv1a64_u64(seed_, 0xcbf29ce484222325ULL)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Inverse-CDF draw: for u uniform on (-1/2, 1/2),
//   x = -b * sign(u) * ln(1 - 2|u|).
inline double sample_laplace(const LaplaceScale& scale, NoiseSource& source) {
  if (scale.zero()) throw std::domain_error("degenerate distribution");
  const double u = source.uniform_signed();
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale.value() * sign * std::log1p(-2.0 * std::abs(u));
}

// Component-wise perturbation with caller-supplied draws; the production
// overload below feeds it Laplace samples.
template <class Sampler>
std::vector<double> perturb_vector_with(std::span<const double> values,
                                        Sampler&& draw) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v))
      throw std::invalid_argument("perturb_vector: non-finite input value");
    out.push_back(v + draw());
  }
  return out;
}

inline std::vector<double> perturb_vector(std::span<const double> values,
                                          const LaplaceScale& scale,
                                          NoiseSource& source) {
  if (scale.zero()) throw std::domain_error("degenerate distribution");
  return perturb_vector_with(values,
                             [&] { return sample_laplace(scale, source); });
}

}  // namespace dapmlm
