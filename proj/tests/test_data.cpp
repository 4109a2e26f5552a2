#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "data.hpp"
#include "errors.hpp"

using namespace homm;

namespace {

bool datasets_identical(const LabeledDataset& a, const LabeledDataset& b) {
    return a.features == b.features && a.labels == b.labels;
}

// class-conditional sample mean of one coordinate
double class_mean(const LabeledDataset& dataset, int cls, Eigen::Index axis) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < dataset.size(); ++i) {
        if (dataset.labels[static_cast<std::size_t>(i)] == cls) {
            sum += dataset.features(i, axis);
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("gaussian mixture pair is deterministic") {
    ShiftSpec spec;
    spec.seed = 3;
    spec.samples_per_class = 50;
    const auto [s1, t1] = gen_gaussian_mixture_pair(spec);
    const auto [s2, t2] = gen_gaussian_mixture_pair(spec);
    CHECK(datasets_identical(s1, s2));
    CHECK(datasets_identical(t1, t2));

    ShiftSpec other = spec;
    other.seed = 4;
    const auto [s3, t3] = gen_gaussian_mixture_pair(other);
    CHECK_FALSE(datasets_identical(s1, s3));
}

TEST_CASE("zero-shift gaussian pair has matching class-conditional means") {
    ShiftSpec spec;
    spec.seed = 11;
    spec.class_count = 3;
    spec.samples_per_class = 400;
    spec.noise_std = 0.4;
    const auto [source, target] = gen_gaussian_mixture_pair(spec);
    const double bound = 4.0 * spec.noise_std / std::sqrt(spec.samples_per_class);
    for (int cls = 0; cls < spec.class_count; ++cls) {
        for (Eigen::Index axis = 0; axis < 2; ++axis) {
            const double gap =
                std::abs(class_mean(source, cls, axis) - class_mean(target, cls, axis));
            CHECK(gap <= bound);
        }
    }
}

TEST_CASE("rotation moves target class means exactly when noise is zero") {
    ShiftSpec spec;
    spec.seed = 13;
    spec.class_count = 3;
    spec.samples_per_class = 10;
    spec.noise_std = 0.0;
    spec.rotation = std::numbers::pi / 2.0;
    const auto [source, target] = gen_gaussian_mixture_pair(spec);
    const double c = std::cos(spec.rotation);
    const double s = std::sin(spec.rotation);
    for (int cls = 0; cls < spec.class_count; ++cls) {
        const double sx = class_mean(source, cls, 0);
        const double sy = class_mean(source, cls, 1);
        const double tx = class_mean(target, cls, 0);
        const double ty = class_mean(target, cls, 1);
        CHECK(tx == doctest::Approx(c * sx - s * sy).epsilon(1e-12));
        CHECK(ty == doctest::Approx(s * sx + c * sy).epsilon(1e-12));
    }
}

TEST_CASE("gaussian pair honors translation and scale on distribution means") {
    ShiftSpec spec;
    spec.seed = 17;
    spec.class_count = 2;
    spec.samples_per_class = 10;
    spec.noise_std = 0.0;
    spec.scale = 2.0;
    spec.translation = {1.0, -1.0};
    const auto [source, target] = gen_gaussian_mixture_pair(spec);
    for (int cls = 0; cls < 2; ++cls) {
        CHECK(class_mean(target, cls, 0) ==
              doctest::Approx(2.0 * class_mean(source, cls, 0) + 1.0).epsilon(1e-12));
        CHECK(class_mean(target, cls, 1) ==
              doctest::Approx(2.0 * class_mean(source, cls, 1) - 1.0).epsilon(1e-12));
    }
}

TEST_CASE("two moons basics") {
    ShiftSpec spec;
    spec.class_count = 2;
    spec.samples_per_class = 60;
    spec.noise_std = 0.1;
    spec.seed = 19;
    const auto [source, target] = gen_two_moons_pair(spec);
    CHECK(source.size() == 120);
    CHECK(target.size() == 120);
    long per_class[2] = {0, 0};
    for (const int label : source.labels) {
        per_class[label] += 1;
    }
    CHECK(per_class[0] == 60);
    CHECK(per_class[1] == 60);

    const auto [s2, t2] = gen_two_moons_pair(spec);
    CHECK(datasets_identical(source, s2));
    CHECK(datasets_identical(target, t2));

    ShiftSpec bad = spec;
    bad.class_count = 3;
    CHECK_THROWS_AS(gen_two_moons_pair(bad), ContractError);
}

TEST_CASE("zero-shift two moons class means agree within the noise bound") {
    ShiftSpec spec;
    spec.class_count = 2;
    spec.samples_per_class = 500;
    spec.noise_std = 0.15;
    spec.seed = 23;
    const auto [source, target] = gen_two_moons_pair(spec);
    const double bound = 4.0 * spec.noise_std / std::sqrt(spec.samples_per_class);
    for (int cls = 0; cls < 2; ++cls) {
        for (Eigen::Index axis = 0; axis < 2; ++axis) {
            CHECK(std::abs(class_mean(source, cls, axis) - class_mean(target, cls, axis)) <=
                  bound);
        }
    }
}

TEST_CASE("strip_labels produces a label-free view") {
    ShiftSpec spec;
    spec.samples_per_class = 5;
    const auto [source, target] = gen_gaussian_mixture_pair(spec);
    const FeatureSet stripped = strip_labels(target);
    CHECK(stripped.features == target.features);
}

TEST_CASE("csv round-trips exactly") {
    ShiftSpec spec;
    spec.samples_per_class = 20;
    spec.seed = 29;
    const auto [source, target] = gen_gaussian_mixture_pair(spec);
    const std::string path = temp_path("homm_test_roundtrip.csv");
    save_features_csv(source, path);
    const LabeledDataset loaded = load_features_csv(path);
    CHECK(datasets_identical(source, loaded));
    CHECK(loaded.has_labels());
    std::filesystem::remove(path);
}

TEST_CASE("csv parsing: labeled and unlabeled headers") {
    const std::string path = temp_path("homm_test_parse.csv");
    {
        std::ofstream out(path);
        out << "f0,f1,label\n0.1,0.2,0\n";
    }
    const LabeledDataset labeled = load_features_csv(path);
    CHECK(labeled.size() == 1);
    CHECK(labeled.dim() == 2);
    CHECK(labeled.features(0, 0) == 0.1);
    CHECK(labeled.features(0, 1) == 0.2);
    REQUIRE(labeled.has_labels());
    CHECK(labeled.labels[0] == 0);

    {
        std::ofstream out(path);
        out << "f0,f1\n0.5,1.25\n-3,4\n";
    }
    const LabeledDataset unlabeled = load_features_csv(path);
    CHECK(unlabeled.size() == 2);
    CHECK_FALSE(unlabeled.has_labels());
    CHECK(unlabeled.domain == DomainTag::target);
    std::filesystem::remove(path);
}

TEST_CASE("csv parse errors carry 1-based line numbers") {
    const std::string path = temp_path("homm_test_badcsv.csv");
    {
        std::ofstream out(path);
        out << "f0,f1,label\n0.1,0.2,0\n0.3,oops,1\n";
    }
    try {
        load_features_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 3") != std::string::npos);
        CHECK(what.find("oops") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "f0,f1\n1,2\n1,2,3\n";
    }
    try {
        load_features_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "f0,f1\n";
    }
    CHECK_THROWS_AS(load_features_csv(path), ParseError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_features_csv(path), IoError);
}
