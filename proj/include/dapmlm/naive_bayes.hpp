#pragma once

// Gaussian Naive Bayes: training, parameter perturbation by the classifier
// owner, log-space prediction and bit-exact text serialization.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dapmlm/dataset.hpp"
#include "dapmlm/noise.hpp"

namespace dapmlm {

// Perturbed standard deviations and class counts are clamped to these floors
// so that densities and log priors stay defined.
inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kCountFloor = 1e-3;

struct AttributeStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ClassParams {
  std::string label;
  double count = 0.0;  // perturbed counts may be fractional
  std::vector<AttributeStats> attributes;
};

enum class ModelTag { Raw, Noisy };

class NbModel {
 public:
  NbModel(std::vector<ClassParams> classes, std::size_t attribute_count,
          ModelTag tag, std::optional<double> epsilon = std::nullopt,
          std::vector<std::string> warnings = {})
      : classes_(std::move(classes)),
        attribute_count_(attribute_count),
        tag_(tag),
        epsilon_(epsilon),
        warnings_(std::move(warnings)) {
    if (classes_.empty()) throw std::invalid_argument("model has no classes");
    for (const auto& c : classes_)
      if (c.attributes.size() != attribute_count_)
        throw std::invalid_argument("model: attribute count mismatch in class " + c.label);
    for (std::size_t i = 1; i < classes_.size(); ++i)
      if (!(classes_[i - 1].label < classes_[i].label))
        throw std::invalid_argument("model: class labels must be unique and sorted");
  }

  const std::vector<ClassParams>& classes() const { return classes_; }
  std::size_t attribute_count() const { return attribute_count_; }
  ModelTag tag() const { return tag_; }
  std::optional<double> epsilon() const { return epsilon_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<ClassParams> classes_;
  std::size_t attribute_count_;
  ModelTag tag_;
  std::optional<double> epsilon_;
  std::vector<std::string> warnings_;
};

// Per class: sample count, per-attribute sample mean and population standard
// deviation. Degenerate deviations are clamped to kSigmaFloor with a warning.
inline NbModel train(const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& labels) {
  if (rows.empty() || rows.size() != labels.size())
    throw std::invalid_argument("train: rows and labels must be non-empty and aligned");
  const std::size_t d = rows.front().size();
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw std::invalid_argument("train: ragged row");
    by_class[labels[i]].push_back(i);
  }
  std::vector<ClassParams> classes;
  std::vector<std::string> warnings;
  for (const auto& [label, members] : by_class) {
    ClassParams cp;
    cp.label = label;
    cp.count = static_cast<double>(members.size());
    cp.attributes.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (auto i : members) mean += rows[i][j];
      mean /= cp.count;
      double var = 0.0;
      for (auto i : members) {
        const double c = rows[i][j] - mean;
        var += c * c;
      }
      double stddev = std::sqrt(var / cp.count);
      if (stddev < kSigmaFloor) {
        stddev = kSigmaFloor;
        warnings.push_back("class " + label + " attribute " + std::to_string(j) +
                           ": degenerate deviation clamped");
      }
      cp.attributes[j] = {mean, stddev};
    }
    classes.push_back(std::move(cp));
  }
  return NbModel(std::move(classes), d, ModelTag::Raw, std::nullopt,
                 std::move(warnings));
}

// Per attribute j with bounds [g_j, h_j] and n training records:
//   mean sensitivity (h_j - g_j) / (n + 1)
//   std  sensitivity n * (h_j - g_j) / (n + 1)
struct ModelSensitivities {
  std::vector<double> mean_sens;
  std::vector<double> std_sens;
};

inline ModelSensitivities model_sensitivities(std::span<const AttributeBounds> bounds,
                                              double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("model_sensitivities: n must be >= 1");
  ModelSensitivities s;
  s.mean_sens.reserve(bounds.size());
  s.std_sens.reserve(bounds.size());
  for (const auto& b : bounds) {
    const double mean_sens = b.range() / (n + 1.0);
    s.mean_sens.push_back(mean_sens);
    s.std_sens.push_back(n * mean_sens);
  }
  return s;
}

// Sampler is called as draw(scale) -> double. Sensitivities are evaluated
// per class with that class's own record count; class counts receive noise
// at a fixed scale (count_noise_scale, default 1) independent of epsilon.
template <class Sampler>
NbModel perturb_model_with(const NbModel& model,
                           std::span<const AttributeBounds> bounds,
                           const PrivacyBudget& budget, Sampler&& draw,
                           double count_noise_scale = 1.0) {
  if (model.tag() == ModelTag::Noisy)
    throw std::invalid_argument("double perturbation");
  if (bounds.size() != model.attribute_count())
    throw std::invalid_argument("perturb_model: bounds count mismatch");
  std::vector<ClassParams> classes = model.classes();
  for (auto& cp : classes) {
    const auto sens = model_sensitivities(bounds, cp.count);
    for (std::size_t j = 0; j < cp.attributes.size(); ++j) {
      if (sens.mean_sens[j] > 0.0)
        cp.attributes[j].mean += draw(sens.mean_sens[j] / budget.epsilon());
      if (sens.std_sens[j] > 0.0)
        cp.attributes[j].stddev += draw(sens.std_sens[j] / budget.epsilon());
      cp.attributes[j].stddev = std::max(cp.attributes[j].stddev, kSigmaFloor);
    }
    if (count_noise_scale > 0.0) cp.count += draw(count_noise_scale);
    cp.count = std::max(cp.count, kCountFloor);
  }
  return NbModel(std::move(classes), model.attribute_count(), ModelTag::Noisy,
                 budget.epsilon(), model.warnings());
}

inline NbModel perturb_model(const NbModel& model,
                             std::span<const AttributeBounds> bounds,
                             const PrivacyBudget& budget, NoiseSource& source,
                             double count_noise_scale = 1.0) {
  return perturb_model_with(
      model, bounds, budget,
      [&](double b) { return sample_laplace(LaplaceScale(b), source); },
      count_noise_scale);
}

namespace detail {

inline double gaussian_log_density(double x, const AttributeStats& s) {
  constexpr double kLogSqrt2Pi = 0.9189385332046727;
  const double z = (x - s.mean) / s.stddev;
  return -kLogSqrt2Pi - std::log(s.stddev) - 0.5 * z * z;
}

}  // namespace detail

// Argmax over classes of log prior + sum of per-attribute log Gaussian
// densities; priors come from the (possibly noisy) class counts. Ties go to
// the smallest class label, which is the first in the sorted class order.
inline std::string predict(const NbModel& model, std::span<const double> row) {
  if (row.size() != model.attribute_count())
    throw std::invalid_argument("predict: attribute count mismatch");
  double total_count = 0.0;
  for (const auto& cp : model.classes()) total_count += cp.count;
  const std::string* best = nullptr;
  double best_score = 0.0;
  for (const auto& cp : model.classes()) {
    double score = std::log(cp.count / total_count);
    for (std::size_t j = 0; j < row.size(); ++j)
      score += detail::gaussian_log_density(row[j], cp.attributes[j]);
    if (best == nullptr || score > best_score) {
      best = &cp.label;
      best_score = score;
    }
  }
  return *best;
}

inline std::vector<std::string> predict_batch(
    const NbModel& model, const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(predict(model, r));
  return out;
}

// ---------------------------------------------------------------------------
// Versioned plain-text model document. Parameters are written as C hexfloats
// so a load/save round trip is bit-exact.

namespace detail {

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace detail

inline void save_model(const NbModel& model, std::ostream& out) {
  out << "dapmlm-model 1\n";
  out << "tag " << (model.tag() == ModelTag::Noisy ? "noisy" : "raw") << "\n";
  if (model.epsilon()) out << "epsilon " << detail::hexfloat(*model.epsilon()) << "\n";
  out << "attributes " << model.attribute_count() << "\n";
  out << "classes " << model.classes().size() << "\n";
  for (const auto& cp : model.classes()) {
    out << "class " << cp.label << "\n";
    out << "count " << detail::hexfloat(cp.count) << "\n";
    for (const auto& a : cp.attributes)
      out << "attr " << detail::hexfloat(a.mean) << " " << detail::hexfloat(a.stddev)
          << "\n";
  }
}

inline void save_model(const NbModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path.string());
  save_model(model, out);
}

inline NbModel load_model(std::istream& in) {
  auto fail = [](const std::string& what) -> std::runtime_error {
    return std::runtime_error("model parse error: " + what);
  };
  std::string line;
  if (!std::getline(in, line) || line != "dapmlm-model 1")
    throw fail("bad or missing version header");

  auto expect_key = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0)
      throw fail("expected '" + key + "'");
    return line.substr(key.size() + 1);
  };

  const std::string tag_str = expect_key("tag");
  if (tag_str != "raw" && tag_str != "noisy") throw fail("unknown tag");
  const ModelTag tag = tag_str == "noisy" ? ModelTag::Noisy : ModelTag::Raw;

  std::optional<double> epsilon;
  if (!std::getline(in, line)) throw fail("truncated document");
  if (line.rfind("epsilon ", 0) == 0) {
    epsilon = std::strtod(line.c_str() + 8, nullptr);
    if (!std::getline(in, line)) throw fail("truncated document");
  }
  if (line.rfind("attributes ", 0) != 0) throw fail("expected 'attributes'");
  const std::size_t d = std::stoul(line.substr(11));
  const std::size_t n_classes = std::stoul(expect_key("classes"));

  std::vector<ClassParams> classes;
  for (std::size_t i = 0; i < n_classes; ++i) {
    ClassParams cp;
    cp.label = expect_key("class");
    cp.count = std::strtod(expect_key("count").c_str(), nullptr);
    cp.attributes.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const std::string payload = expect_key("attr");
      char* end = nullptr;
      cp.attributes[j].mean = std::strtod(payload.c_str(), &end);
      cp.attributes[j].stddev = std::strtod(end, nullptr);
    }
    classes.push_back(std::move(cp));
  }
  return NbModel(std::move(classes), d, tag, epsilon);
}

inline NbModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  return load_model(in);
}

}  // namespace dapmlm
