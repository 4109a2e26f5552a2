#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "errors.hpp"
#include "moments.hpp"
#include "rng.hpp"

using namespace homm;

namespace {

Matrix random_batch(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(-1.0, 1.0);
        }
    }
    return m;
}

// Independent oracle: recompute one tensor entry by decoding the flat
// index into digits and multiplying coordinates directly.
double tensor_entry_oracle(const Vector& u, int order, std::size_t flat) {
    double product = 1.0;
    std::size_t rest = flat;
    const auto length = static_cast<std::size_t>(u.size());
    std::vector<std::size_t> digits(static_cast<std::size_t>(order));
    for (int j = order - 1; j >= 0; --j) {
        digits[static_cast<std::size_t>(j)] = rest % length;
        rest /= length;
    }
    for (int j = 0; j < order; ++j) {
        product *= u(static_cast<Eigen::Index>(digits[static_cast<std::size_t>(j)]));
    }
    return product;
}

} // namespace

TEST_CASE("tensor_power base cases") {
    Vector u1(1);
    u1 << 3.0;
    const Vector p0 = tensor_power(u1, 0);
    REQUIRE(p0.size() == 1);
    CHECK(p0(0) == 1.0);

    Vector u2(2);
    u2 << 1.0, 2.0;
    const Vector p1 = tensor_power(u2, 1);
    REQUIRE(p1.size() == 2);
    CHECK(p1(0) == 1.0);
    CHECK(p1(1) == 2.0);

    const Vector p2 = tensor_power(u2, 2);
    REQUIRE(p2.size() == 4);
    CHECK(p2(0) == 1.0);
    CHECK(p2(1) == 2.0);
    CHECK(p2(2) == 2.0);
    CHECK(p2(3) == 4.0);
}

TEST_CASE("tensor_power entries match the multi-index oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index length = 1 + static_cast<Eigen::Index>(rng.bounded(4));
        const int order = static_cast<int>(rng.bounded(5)); // 0..4
        Vector u(length);
        for (Eigen::Index i = 0; i < length; ++i) {
            u(i) = rng.uniform(-2.0, 2.0);
        }
        const Vector power = tensor_power(u, order);
        for (Eigen::Index flat = 0; flat < power.size(); ++flat) {
            CHECK(power(flat) ==
                  doctest::Approx(tensor_entry_oracle(u, order, static_cast<std::size_t>(flat)))
                      .epsilon(1e-14));
        }
    }
}

TEST_CASE("tensor_power enforces the memory cap") {
    Vector u = Vector::Ones(100);
    CHECK_THROWS_AS(tensor_power(u, 4, 1000), CapacityError);
    try {
        tensor_power(u, 4, 1000);
    } catch (const CapacityError& e) {
        const std::string what = e.what();
        CHECK(what.find("L=100") != std::string::npos);
        CHECK(what.find("p=4") != std::string::npos);
        CHECK(what.find("cap=1000") != std::string::npos);
    }
}

TEST_CASE("mean_tensor_power examples") {
    Matrix batch(2, 2);
    batch << 1, 0, 0, 1;
    const Vector m1 = mean_tensor_power(batch, 1);
    CHECK(m1(0) == 0.5);
    CHECK(m1(1) == 0.5);

    const Vector m2 = mean_tensor_power(batch, 2);
    REQUIRE(m2.size() == 4);
    CHECK(m2(0) == 0.5);
    CHECK(m2(1) == 0.0);
    CHECK(m2(2) == 0.0);
    CHECK(m2(3) == 0.5);
}

TEST_CASE("mean_tensor_power of identical rows is the row's power") {
    Rng rng(5);
    Vector row(3);
    row << 0.3, -0.7, 0.2;
    Matrix batch(4, 3);
    for (int i = 0; i < 4; ++i) {
        batch.row(i) = row.transpose();
    }
    for (int order : {0, 1, 2, 3}) {
        const Vector mean = mean_tensor_power(batch, order);
        const Vector single = tensor_power(row, order);
        CHECK((mean - single).lpNorm<Eigen::Infinity>() < 1e-15);
    }
}

TEST_CASE("mean_tensor_power unchanged by duplicating every row") {
    Rng rng(7);
    const Matrix batch = random_batch(rng, 5, 4);
    Matrix doubled(10, 4);
    doubled << batch, batch;
    for (int order : {1, 2, 3}) {
        const Vector a = mean_tensor_power(batch, order);
        const Vector b = mean_tensor_power(doubled, order);
        CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-14);
    }
}

TEST_CASE("sample_indices determinism and degenerate width") {
    const IndexMatrix a = sample_indices(64, 3, 1000, 7);
    const IndexMatrix b = sample_indices(64, 3, 1000, 7);
    CHECK(a == b);

    const IndexMatrix ones = sample_indices(1, 3, 5, 123);
    CHECK(ones.minCoeff() == 0);
    CHECK(ones.maxCoeff() == 0);
    CHECK(ones.rows() == 5);
    CHECK(ones.cols() == 3);
}

TEST_CASE("sample_indices frozen draws pin the generator") {
    // First rows of sample_indices(8, 3, 4, 42), recorded once; any change
    // to the generator or the rejection scheme shows up here.
    const IndexMatrix idx = sample_indices(8, 3, 4, 42);
    const std::int32_t expected[4][3] = {{5, 3, 2}, {4, 2, 6}, {5, 4, 5}, {6, 7, 6}};
    for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < 3; ++j) {
            CHECK(idx(k, j) == expected[k][j]);
        }
    }
}

TEST_CASE("sample_indices per-column frequencies stay near uniform") {
    const Eigen::Index length = 64;
    const Eigen::Index count = 100000;
    const IndexMatrix idx = sample_indices(length, 3, count, 7);
    // Each index should appear with frequency 1/64; tolerate 3 standard
    // deviations of a binomial count.
    const double expected = static_cast<double>(count) / static_cast<double>(length);
    const double stddev = std::sqrt(static_cast<double>(count) * (1.0 / 64.0) * (63.0 / 64.0));
    for (int column = 0; column < 3; ++column) {
        std::vector<long> histogram(static_cast<std::size_t>(length), 0);
        for (Eigen::Index k = 0; k < count; ++k) {
            histogram[static_cast<std::size_t>(idx(k, column))] += 1;
        }
        for (const long bucket : histogram) {
            CHECK(std::abs(static_cast<double>(bucket) - expected) <= 3.0 * stddev);
        }
    }
}

TEST_CASE("sampled_products examples") {
    Matrix batch(1, 2);
    batch << 2.0, 3.0;
    IndexMatrix idx(1, 2);
    idx << 0, 1;
    const Matrix products = sampled_products(batch, idx);
    CHECK(products(0, 0) == 6.0);

    IndexMatrix repeated(1, 3);
    repeated << 1, 1, 1;
    CHECK(sampled_products(batch, repeated)(0, 0) == 27.0);

    IndexMatrix twice(2, 3);
    twice << 1, 0, 1, 1, 0, 1;
    const Matrix both = sampled_products(batch, twice);
    CHECK(both(0, 0) == both(0, 1));
}

TEST_CASE("sampled_products rejects out-of-range indices") {
    Matrix batch(1, 2);
    batch << 2.0, 3.0;
    IndexMatrix idx(1, 1);
    idx << 2;
    CHECK_THROWS_AS(sampled_products(batch, idx), ContractError);
}

TEST_CASE("exhaustive index products reproduce tensor_power row-wise") {
    Rng rng(19);
    const Matrix batch = random_batch(rng, 3, 4);
    for (int order : {1, 2, 3}) {
        const IndexMatrix idx = exhaustive_indices(4, order);
        const Matrix products = sampled_products(batch, idx);
        for (Eigen::Index i = 0; i < batch.rows(); ++i) {
            const Vector power = tensor_power(batch.row(i).transpose(), order);
            REQUIRE(products.cols() == power.size());
            for (Eigen::Index k = 0; k < power.size(); ++k) {
                CHECK(products(i, k) == power(k));
            }
        }
    }
}

TEST_CASE("partition_groups examples") {
    const GroupPartition even = partition_groups(6, 2);
    REQUIRE(even.groups.size() == 2);
    CHECK(even.groups[0].begin == 0);
    CHECK(even.groups[0].end == 3);
    CHECK(even.groups[1].begin == 3);
    CHECK(even.groups[1].end == 6);

    const GroupPartition odd = partition_groups(7, 2);
    CHECK(odd.width == 3);
    CHECK(odd.groups[1].end == 6); // coordinate 6 unused

    const GroupPartition whole = partition_groups(6, 1);
    REQUIRE(whole.groups.size() == 1);
    CHECK(whole.groups[0].begin == 0);
    CHECK(whole.groups[0].end == 6);

    const GroupPartition widened = partition_groups(7, 2, true);
    CHECK(widened.groups[1].end == 7);

    CHECK_THROWS_AS(partition_groups(4, 5), ContractError);
}

TEST_CASE("tensor_power_grad matches a finite difference on <g, u^p>") {
    Rng rng(23);
    for (int order : {1, 2, 3}) {
        const Eigen::Index length = 4;
        Vector u(length);
        for (Eigen::Index i = 0; i < length; ++i) {
            u(i) = rng.uniform(-1.0, 1.0);
        }
        Vector g(static_cast<Eigen::Index>(std::pow(length, order)));
        // random symmetric tensor: symmetrize a random one
        const IndexMatrix idx = exhaustive_indices(length, order);
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            g(k) = 0.0;
        }
        // build from a random vector's tensor power plus a constant, which
        // is symmetric by construction
        Vector v(length);
        for (Eigen::Index i = 0; i < length; ++i) {
            v(i) = rng.uniform(-1.0, 1.0);
        }
        g = tensor_power(v, order) * 0.7;

        const Vector grad = tensor_power_grad(g, length, order, u);
        const double h = 1e-6;
        for (Eigen::Index a = 0; a < length; ++a) {
            Vector up = u, dn = u;
            up(a) += h;
            dn(a) -= h;
            const double numeric =
                (g.dot(tensor_power(up, order)) - g.dot(tensor_power(dn, order))) / (2.0 * h);
            CHECK(grad(a) == doctest::Approx(numeric).epsilon(1e-6));
        }
    }
}
