#include <filesystem>
#include <fstream>
#include <set>

#include "catch_amalgamated.hpp"
#include "dapmlm/dataset.hpp"

using namespace dapmlm;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

Dataset tiny() {
  return Dataset("tiny",
                 {{1.0, 10.0}, {2.0, 20.0}, {3.0, 30.0}, {4.0, 40.0}},
                 {"x", "y", "x", "y"});
}

}  // namespace

TEST_CASE("dataset validates shape, finiteness and bounds") {
  CHECK_THROWS_AS(Dataset("d", {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset("d", {{1.0}}, {"a", "b"}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset("d", {{1.0}, {1.0, 2.0}}, {"a", "b"}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset("d", {{std::nan("")}}, {"a"}), std::invalid_argument);
  CHECK_THROWS_AS(
      Dataset("d", {{5.0}}, {"a"}, std::vector<AttributeBounds>{{0.0, 1.0}}),
      std::invalid_argument);
  const auto d = tiny();
  CHECK(d.bounds()[0].lower == 1.0);
  CHECK(d.bounds()[0].upper == 4.0);
  CHECK(d.bounds()[1].range() == 30.0);
  CHECK(d.class_list() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("attribute bounds reject inverted or non-finite ranges") {
  CHECK_THROWS_AS(AttributeBounds(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(AttributeBounds(0.0, std::nan("")), std::invalid_argument);
  CHECK(attribute_sensitivity(AttributeBounds(-2.0, 3.0)).value() == 5.0);
}

TEST_CASE("per-cell perturbation changes every value at distinct offsets") {
  const auto d = tiny();
  NoiseSource src(9);
  const auto s = perturb_dataset(d, PrivacyBudget(1.0), src, NoisePlacement::PerCell, "o");
  REQUIRE(s.perturbed());
  CHECK(s.epsilon() == 1.0);
  CHECK(s.owner() == "o");
  CHECK(s.labels() == d.labels());
  std::set<double> offsets;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.attribute_count(); ++j) {
      CHECK(s.rows()[i][j] != d.rows()[i][j]);
      offsets.insert(s.rows()[i][j] - d.rows()[i][j]);
    }
  CHECK(offsets.size() == d.size() * d.attribute_count());
}

TEST_CASE("per-row perturbation reuses one draw across a record") {
  const auto d = tiny();
  NoiseSource src(9);
  const auto s = perturb_dataset(d, PrivacyBudget(0.5), src, NoisePlacement::PerRow, "o");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double offset = s.rows()[i][0] - d.rows()[i][0];
    CHECK(offset != 0.0);
    for (std::size_t j = 1; j < d.attribute_count(); ++j)
      CHECK(s.rows()[i][j] - d.rows()[i][j] == Catch::Approx(offset).margin(1e-12));
  }
}

TEST_CASE("noise scale is range over epsilon per column") {
  const auto d = tiny();  // ranges 3 and 30
  std::vector<double> seen;
  perturb_dataset_with(
      d, PrivacyBudget(2.0),
      [&](double b) {
        seen.push_back(b);
        return 0.5;
      },
      NoisePlacement::PerCell, "o");
  REQUIRE(seen.size() == 8);
  for (std::size_t i = 0; i < seen.size(); i += 2) {
    CHECK(seen[i] == 1.5);    // 3 / 2
    CHECK(seen[i + 1] == 15.0);  // 30 / 2
  }
}

TEST_CASE("unperturbed release keeps values and records the fact") {
  const auto d = tiny();
  const auto s = as_unperturbed_release(d, "o");
  CHECK_FALSE(s.perturbed());
  CHECK_FALSE(s.epsilon().has_value());
  CHECK(s.rows() == d.rows());
}

TEST_CASE("normalizer produces zero mean unit deviation and is reusable") {
  const std::vector<std::vector<double>> rows{{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
  const auto p = fit_normalizer(rows);
  CHECK(p.mean[0] == Catch::Approx(2.0));
  CHECK(p.stddev[1] == 1.0);  // degenerate column coerced
  const auto out = apply_normalizer(rows, p);
  double m = 0.0, v = 0.0;
  for (const auto& r : out) m += r[0];
  m /= 3.0;
  for (const auto& r : out) v += (r[0] - m) * (r[0] - m);
  CHECK(m == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::sqrt(v / 3.0) == Catch::Approx(1.0));
  CHECK(out[0][1] == 0.0);
  CHECK_THROWS_AS(apply_normalizer({{1.0}}, p), std::invalid_argument);
  CHECK_THROWS_AS(fit_normalizer({}), std::invalid_argument);
}

TEST_CASE("split takes floor(n*z) training rows") {
  // Published split sizes: 303 -> 272/31 and 625 -> 562/63 at z = 0.9,
  // both fractional products (272.7, 562.5) that round-half-up would miss.
  for (const auto& [n, want_train] :
       std::vector<std::pair<std::size_t, std::size_t>>{{303, 272}, {625, 562},
                                                        {150, 135}, {12960, 11664}}) {
    std::vector<std::vector<double>> rows(n, {0.0});
    for (std::size_t i = 0; i < n; ++i) rows[i][0] = static_cast<double>(i);
    std::vector<std::string> labels(n, "a");
    labels[0] = "b";
    const Dataset d("d", rows, labels);
    const auto parts = split(d, 0.9, 1);
    CHECK(parts.train_rows.size() == want_train);
    CHECK(parts.test_rows.size() == n - want_train);
  }
}

TEST_CASE("split is a seeded permutation of the input") {
  const auto d = tiny();
  const auto a = split(d, 0.5, 7);
  const auto b = split(d, 0.5, 7);
  const auto c = split(d, 0.5, 8);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.test_rows == b.test_rows);
  CHECK(a.train_rows != c.train_rows);
  std::multiset<double> seen;
  for (const auto& r : a.train_rows) seen.insert(r[0]);
  for (const auto& r : a.test_rows) seen.insert(r[0]);
  CHECK(seen == std::multiset<double>{1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(split(d, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(d, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(d, 0.1, 1), std::invalid_argument);  // empty train side
}

TEST_CASE("csv loader parses numeric data with a header") {
  const auto path = write_temp("ds_plain.csv", "f1,f2,label\n1.5,2,a\n3,4.25,b\n");
  const auto d = load_csv(path);
  CHECK(d.name() == "ds_plain");
  CHECK(d.size() == 2);
  CHECK(d.rows()[1][1] == 4.25);
  CHECK(d.labels() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("csv loader reports row and column of a parse failure") {
  const auto path = write_temp("ds_bad.csv", "f1,f2,label\n1,2,a\nx,4,b\n");
  try {
    load_csv(path);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find(":3") != std::string::npos);
    CHECK(what.find("f1") != std::string::npos);
  }
  const auto ragged = write_temp("ds_ragged.csv", "f1,f2,label\n1,2\n");
  CHECK_THROWS_AS(load_csv(ragged), std::runtime_error);
}

TEST_CASE("schema drives ordinal encoding of categorical columns") {
  const auto spath =
      write_temp("ds.schema", "size categorical small medium large\nweight numeric\ncls label\n");
  const auto schema = load_schema(spath);
  REQUIRE(schema.features.size() == 2);
  CHECK(schema.features[0].categories == std::vector<std::string>{"small", "medium", "large"});
  CHECK(schema.label_name == "cls");

  const auto dpath = write_temp("ds_cat.csv", "size,weight,cls\nmedium,1.5,y\nlarge,2,n\n");
  const auto d = load_csv(dpath, schema);
  CHECK(d.rows()[0][0] == 1.0);
  CHECK(d.rows()[1][0] == 2.0);

  const auto bad = write_temp("ds_cat_bad.csv", "size,weight,cls\nhuge,1,y\n");
  CHECK_THROWS_WITH(load_csv(bad, schema), Catch::Matchers::ContainsSubstring("huge"));
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(load_schema("/nonexistent.schema"), std::runtime_error);
  const auto nolabel = write_temp("ds_nolabel.schema", "a numeric\n");
  CHECK_THROWS_AS(load_schema(nolabel), std::runtime_error);
  const auto nocats = write_temp("ds_nocats.schema", "a categorical\nb label\n");
  CHECK_THROWS_AS(load_schema(nocats), std::runtime_error);
}

TEST_CASE("manifest records ingestion facts") {
  const auto path = write_temp("ds_m.csv", "f1,label\n1,a\n2,b\n");
  const auto d = load_csv(path);
  const auto m = dataset_manifest(d, std::nullopt, file_checksum(path));
  CHECK(m["rows"] == 2);
  CHECK(m["attributes"] == 1);
  CHECK(m["classes"] == std::vector<std::string>{"a", "b"});
  CHECK(m["bounds"][0]["lower"] == 1.0);
  CHECK(m["source_checksum"] == file_checksum(path));
}

TEST_CASE("bundled datasets load with their sidecar schemas") {
  const std::filesystem::path data_dir = DAPMLM_DATA_DIR;
  const auto iris = load_csv(data_dir / "iris.csv", load_schema(data_dir / "iris.schema"));
  CHECK(iris.size() == 150);
  CHECK(iris.attribute_count() == 4);
  CHECK(iris.class_list().size() == 3);
  const auto balance = load_csv(data_dir / "balance_scale.csv",
                                load_schema(data_dir / "balance_scale.schema"));
  CHECK(balance.size() == 625);
  CHECK(balance.attribute_count() == 4);
  CHECK(balance.class_list() == std::vector<std::string>{"B", "L", "R"});
}
