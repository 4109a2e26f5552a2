#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "errors.hpp"

using namespace homm;

TEST_CASE("defaults validate") {
    const ExperimentConfig config;
    CHECK_NOTHROW(validate_config(config));
}

TEST_CASE("parse overrides and comments") {
    const ExperimentConfig config = parse_config_text(
        "# comment line\n"
        "seed = 99\n"
        "loss_variant = sampled   # trailing comment\n"
        "p = 4\n"
        "lambda_d = 1e4\n"
        "hidden = 16,16\n"
        "translation = 0.5,-0.25\n"
        "\n");
    CHECK(config.seed == 99);
    CHECK(config.loss_variant == "sampled");
    CHECK(config.p == 4);
    CHECK(config.lambda_d == 1e4);
    REQUIRE(config.hidden.size() == 2);
    CHECK(config.hidden[0] == 16);
    REQUIRE(config.translation.size() == 2);
    CHECK(config.translation[1] == -0.25);
}

TEST_CASE("parse errors carry line numbers and key names") {
    try {
        parse_config_text("seed = 1\nbogus_key = 2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 2") != std::string::npos);
        CHECK(what.find("bogus_key") != std::string::npos);
    }
    try {
        parse_config_text("eta = not_a_number\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("eta") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("just some words\n"), ParseError);
}

TEST_CASE("validation names the offending field") {
    ExperimentConfig config;
    config.eta = 1.5;
    try {
        validate_config(config);
        FAIL("expected ContractError");
    } catch (const ContractError& e) {
        const std::string what = e.what();
        CHECK(what.find("eta") != std::string::npos);
        CHECK(what.find("1.5") != std::string::npos);
    }

    config = ExperimentConfig{};
    config.loss_variant = "nonsense";
    CHECK_THROWS_AS(validate_config(config), ContractError);

    config = ExperimentConfig{};
    config.warmup_steps = 500;
    config.total_steps = 100;
    CHECK_THROWS_AS(validate_config(config), ContractError);

    config = ExperimentConfig{};
    config.loss_variant = "full";
    config.adapted_width = 256;
    config.p = 4; // 256^4 over the default cap
    CHECK_THROWS_AS(validate_config(config), CapacityError);
}

TEST_CASE("serialize/parse round-trip preserves every field") {
    ExperimentConfig config;
    config.seed = 1234567;
    config.lambda_d = 3.14159e4;
    config.eta = 0.8500000000000001;
    config.hidden = {10, 20, 30};
    config.translation = {0.1, 0.2};
    config.loss_variant = "kernelized";
    config.strict_center_update = true;
    config.dataset = "csv";
    config.source_csv = "a.csv";
    config.target_csv = "b.csv";
    const ExperimentConfig reparsed = parse_config_text(serialize_config(config));
    CHECK(reparsed == config);
}

TEST_CASE("load_config_file") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "homm_test_config.txt").string();
    {
        std::ofstream out(path);
        out << "seed = 5\ntotal_steps = 42\n";
    }
    const ExperimentConfig config = load_config_file(path);
    CHECK(config.seed == 5);
    CHECK(config.total_steps == 42);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config_file(path), IoError);
}
