#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "discrepancy.hpp"
#include "errors.hpp"
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

double rel_diff(double a, double b) {
    const double denom = std::max(std::abs(a), std::abs(b));
    return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

Matrix shuffle_rows(Rng& rng, const Matrix& batch) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(batch.rows()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    Matrix out(batch.rows(), batch.cols());
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        out.row(i) = batch.row(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

} // namespace

TEST_CASE("homm_full hand values") {
    Matrix source(1, 2), target(1, 2);
    source << 1, 0;
    target << 0, 1;
    CHECK(homm_full(source, target, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(homm_full(source, target, 2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(homm_full(source, target, 0) == 0.0);
    CHECK(homm_full(source, source, 3) == 0.0);
}

TEST_CASE("homm_full supports unequal batch sizes") {
    Rng rng(3);
    const Matrix source = random_batch(rng, 5, 4);
    const Matrix target = random_batch(rng, 9, 4);
    CHECK(homm_full(source, target, 2) >= 0.0);
    // mean-based: duplicating the source rows changes nothing
    Matrix doubled(10, 4);
    doubled << source, source;
    CHECK(rel_diff(homm_full(source, target, 2), homm_full(doubled, target, 2)) < 1e-13);
}

TEST_CASE("homm_full rejects width mismatch") {
    Matrix source(1, 2), target(1, 3);
    source.setZero();
    target.setZero();
    CHECK_THROWS_AS(homm_full(source, target, 1), ContractError);
}

TEST_CASE("homm_group hand value and reduction to homm_full") {
    Matrix source(1, 4), target(1, 4);
    source << 1, 0, 2, 0;
    target << 0, 1, 0, 2;
    // groups {0,1} and {2,3}: diffs (1,-1) and (2,-2); (2 + 8) / (1 * 2)
    CHECK(homm_group(source, target, 1, 2) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(homm_group(source, source, 1, 2) == 0.0);

    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(7));
        const Matrix s = random_batch(rng, b, width);
        const Matrix t = random_batch(rng, b, width);
        const int order = 1 + static_cast<int>(rng.bounded(3));
        CHECK(rel_diff(homm_group(s, t, order, 1), homm_full(s, t, order)) < 1e-12);
    }
}

TEST_CASE("homm_group requires equal batch sizes") {
    Rng rng(4);
    const Matrix source = random_batch(rng, 4, 4);
    const Matrix target = random_batch(rng, 5, 4);
    CHECK_THROWS_AS(homm_group(source, target, 2, 2), ContractError);
}

TEST_CASE("homm_sampled matches homm_full on exhaustive indices") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(7)); // [2, 8]
        const Matrix s = random_batch(rng, b, width);
        const Matrix t = random_batch(rng, b, width);
        for (int order : {1, 2, 3}) {
            const IndexMatrix idx = exhaustive_indices(width, order);
            CHECK(rel_diff(homm_sampled(s, t, idx), homm_full(s, t, order)) < 1e-12);
        }
    }
}

TEST_CASE("homm_sampled is zero on identical batches") {
    Rng rng(31);
    const Matrix batch = random_batch(rng, 8, 6);
    const IndexMatrix idx = sample_indices(6, 3, 500, 99);
    CHECK(homm_sampled(batch, batch, idx) == 0.0);
}

TEST_CASE("homm_sampled monte-carlo estimate approaches the exact value") {
    Rng rng(37);
    const Matrix source = random_batch(rng, 32, 16);
    const Matrix target = random_batch(rng, 32, 16);
    const double exact = homm_full(source, target, 3);
    double mean = 0.0;
    const int repeats = 20;
    for (int r = 0; r < repeats; ++r) {
        const IndexMatrix idx =
            sample_indices(16, 3, 10000, mix_seed(1234, static_cast<std::uint64_t>(r)));
        mean += homm_sampled(source, target, idx);
    }
    mean /= repeats;
    CHECK(rel_diff(mean, exact) < 0.10);
}

TEST_CASE("khomm hand value") {
    Matrix source(2, 1), target(2, 1);
    source << 0, 0;
    target << 1, 1;
    IndexMatrix idx(1, 1);
    idx << 0;
    const KernelConfig kernel{1.0, 2};
    const double expected = 2.0 - 2.0 * std::exp(-1.0);
    CHECK(khomm(source, target, idx, kernel) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(khomm(source, source, idx, kernel) == 0.0);
}

TEST_CASE("khomm with order-1 exhaustive indices equals kernel mmd on raw features") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(7));
        const Matrix s = random_batch(rng, b, width);
        const Matrix t = random_batch(rng, b, width);
        const KernelConfig kernel{0.7, 2};
        const IndexMatrix idx = exhaustive_indices(width, 1);
        // independent oracle: direct loops over raw feature rows
        long double ss = 0.0L, st = 0.0L, tt = 0.0L;
        for (Eigen::Index i = 0; i < b; ++i) {
            for (Eigen::Index j = 0; j < b; ++j) {
                ss += std::exp(-kernel.gamma * (s.row(i) - s.row(j)).squaredNorm());
                st += std::exp(-kernel.gamma * (s.row(i) - t.row(j)).squaredNorm());
                tt += std::exp(-kernel.gamma * (t.row(i) - t.row(j)).squaredNorm());
            }
        }
        const double direct =
            static_cast<double>((ss - 2.0L * st + tt) / static_cast<long double>(b * b));
        CHECK(rel_diff(khomm(s, t, idx, kernel), direct) < 1e-12);
    }
}

TEST_CASE("khomm validates kernel parameters") {
    Matrix batch(2, 2);
    batch.setZero();
    IndexMatrix idx(1, 1);
    idx << 0;
    CHECK_THROWS_AS(khomm(batch, batch, idx, KernelConfig{0.0, 2}), ContractError);
    CHECK_THROWS_AS(khomm(batch, batch, idx, KernelConfig{1.0, 3}), ContractError);
}

TEST_CASE("linear_mmd equals order-1 homm_full") {
    Matrix source(1, 2), target(1, 2);
    source << 1, 0;
    target << 0, 1;
    CHECK(linear_mmd(source, target) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(linear_mmd(source, source) == 0.0);

    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index bs = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index bt = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Matrix s = random_batch(rng, bs, width);
        const Matrix t = random_batch(rng, bt, width);
        CHECK(rel_diff(linear_mmd(s, t), homm_full(s, t, 1)) < 1e-12);
    }
}

TEST_CASE("gram_loss equals order-2 homm_full when uncentralized") {
    Matrix source(1, 2), target(1, 2);
    source << 1, 0;
    target << 0, 1;
    CHECK(gram_loss(source, target, false) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gram_loss(source, source, false) == 0.0);

    Rng rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Matrix s = random_batch(rng, b, width);
        const Matrix t = random_batch(rng, b, width);
        CHECK(rel_diff(gram_loss(s, t, false), homm_full(s, t, 2)) < 1e-12);
    }
}

TEST_CASE("centralized gram matching ignores mean shifts") {
    Rng rng(53);
    const Matrix source = random_batch(rng, 16, 6);
    Matrix shifted = source;
    shifted.rowwise() += Eigen::RowVectorXd::Constant(6, 3.5);
    // covariance matching cannot see a pure translation
    CHECK(gram_loss(source, shifted, true) < 1e-22);
    CHECK(gram_loss(source, shifted, false) > 1e-3);
}

TEST_CASE("losses are symmetric and non-negative on random batches") {
    Rng rng(59);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.bounded(15));
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(7));
        const Matrix s = random_batch(rng, b, width);
        const Matrix t = random_batch(rng, b, width);
        const IndexMatrix idx = sample_indices(width, 3, 200, 7);
        const KernelConfig kernel{0.5, 2};

        const double values[6] = {homm_full(s, t, 3),    homm_group(s, t, 3, 2),
                                  homm_sampled(s, t, idx), khomm(s, t, idx, kernel),
                                  linear_mmd(s, t),        gram_loss(s, t, false)};
        const double swapped[6] = {homm_full(t, s, 3),    homm_group(t, s, 3, 2),
                                   homm_sampled(t, s, idx), khomm(t, s, idx, kernel),
                                   linear_mmd(t, s),        gram_loss(t, s, false)};
        for (int i = 0; i < 6; ++i) {
            CHECK(values[i] >= 0.0);
            CHECK(rel_diff(values[i], swapped[i]) < 1e-12);
        }
    }
}

TEST_CASE("distribution-level losses are invariant to row order") {
    Rng rng(61);
    const Matrix s = random_batch(rng, 12, 6);
    const Matrix t = random_batch(rng, 12, 6);
    const Matrix s2 = shuffle_rows(rng, s);
    const Matrix t2 = shuffle_rows(rng, t);
    const IndexMatrix idx = sample_indices(6, 3, 300, 11);
    const KernelConfig kernel{0.5, 2};
    CHECK(rel_diff(homm_full(s, t, 3), homm_full(s2, t2, 3)) < 1e-12);
    CHECK(rel_diff(homm_group(s, t, 3, 2), homm_group(s2, t2, 3, 2)) < 1e-12);
    CHECK(rel_diff(homm_sampled(s, t, idx), homm_sampled(s2, t2, idx)) < 1e-12);
    CHECK(rel_diff(khomm(s, t, idx, kernel), khomm(s2, t2, idx, kernel)) < 1e-12);
    CHECK(rel_diff(linear_mmd(s, t), linear_mmd(s2, t2)) < 1e-12);
    CHECK(rel_diff(gram_loss(s, t, false), gram_loss(s2, t2, false)) < 1e-12);
}

TEST_CASE("entropy_loss values") {
    Matrix onehot(2, 3);
    onehot << 1, 0, 0, 0, 0, 1;
    CHECK(entropy_loss(onehot) == 0.0);

    Matrix half(1, 2);
    half << 0.5, 0.5;
    CHECK(entropy_loss(half) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    Matrix uniform(4, 5);
    uniform.setConstant(0.2);
    CHECK(entropy_loss(uniform) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("entropy_loss rejects unnormalized rows") {
    Matrix bad(1, 2);
    bad << 0.7, 0.7;
    CHECK_THROWS_AS(entropy_loss(bad), ContractError);
}

TEST_CASE("clustering_loss values and fallbacks") {
    Matrix features(2, 2);
    features << 1, 1, 0.5, 0.5;
    ClassCenters centers{Matrix::Zero(2, 2), 0.5};

    PseudoLabelAssignment empty;
    CHECK(clustering_loss(features, empty, centers) == 0.0);

    PseudoLabelAssignment one;
    one.sample_indices = {0};
    one.labels = {0};
    one.confidences = {0.9};
    CHECK(clustering_loss(features, one, centers) == doctest::Approx(2.0).epsilon(1e-14));

    // sample exactly at its center
    centers.centers.row(1) << 0.5, 0.5;
    PseudoLabelAssignment at_center;
    at_center.sample_indices = {1};
    at_center.labels = {1};
    at_center.confidences = {0.9};
    CHECK(clustering_loss(features, at_center, centers) == 0.0);

    PseudoLabelAssignment bad;
    bad.sample_indices = {0};
    bad.labels = {5};
    bad.confidences = {0.9};
    CHECK_THROWS_AS(clustering_loss(features, bad, centers), ContractError);
}

TEST_CASE("update_centers moving average") {
    Matrix features(1, 2);
    features << 1, 1;
    ClassCenters centers{Matrix::Zero(2, 2), 0.5};
    PseudoLabelAssignment one;
    one.sample_indices = {0};
    one.labels = {0};
    one.confidences = {0.9};

    const ClassCenters updated = update_centers(centers, features, one);
    // delta = (1,1)/(1+1) = (0.5, 0.5); new = 0.5*0 + 0.5*delta
    CHECK(updated.centers(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(updated.centers(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
    // class 1 had no samples: unchanged
    CHECK(updated.centers(1, 0) == 0.0);
    CHECK(updated.centers(1, 1) == 0.0);

    // alpha = 1 keeps centers regardless of assignment
    ClassCenters sticky{Matrix::Constant(2, 2, 0.3), 1.0};
    const ClassCenters kept = update_centers(sticky, features, one);
    CHECK((kept.centers - sticky.centers).lpNorm<Eigen::Infinity>() == 0.0);

    // strict mode shrinks absent classes toward the origin
    ClassCenters strict{Matrix::Constant(2, 2, 1.0), 0.5};
    const ClassCenters shrunk = update_centers(strict, features, one, true);
    CHECK(shrunk.centers(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("analytic feature gradients match finite differences") {
    Rng rng(67);
    const Eigen::Index b = 4;
    const Eigen::Index width = 5;
    Matrix source = random_batch(rng, b, width);
    Matrix target = random_batch(rng, b, width);
    const IndexMatrix idx = sample_indices(width, 3, 60, 5);
    const KernelConfig kernel{0.4, 2};
    ClassCenters centers{random_batch(rng, 3, width), 0.5};
    PseudoLabelAssignment assignment;
    assignment.sample_indices = {0, 2, 3};
    assignment.labels = {1, 0, 2};
    assignment.confidences = {0.9, 0.9, 0.9};

    struct Case {
        const char* name;
        std::function<double(const Matrix&, const Matrix&, Matrix&, Matrix&)> grad;
        std::function<double(const Matrix&, const Matrix&)> value;
    };
    const std::vector<Case> cases = {
        {"full_p3",
         [](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return homm_full_grad(s, t, 3, gs, gt);
         },
         [](const Matrix& s, const Matrix& t) { return homm_full(s, t, 3); }},
        {"group_p3",
         [](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return homm_group_grad(s, t, 3, 2, gs, gt);
         },
         [](const Matrix& s, const Matrix& t) { return homm_group(s, t, 3, 2); }},
        {"sampled",
         [&idx](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return homm_sampled_grad(s, t, idx, gs, gt);
         },
         [&idx](const Matrix& s, const Matrix& t) { return homm_sampled(s, t, idx); }},
        {"khomm",
         [&](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return khomm_grad(s, t, idx, kernel, gs, gt);
         },
         [&](const Matrix& s, const Matrix& t) { return khomm(s, t, idx, kernel); }},
        {"khomm_exp1",
         [&](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return khomm_grad(s, t, idx, KernelConfig{0.4, 1}, gs, gt);
         },
         [&](const Matrix& s, const Matrix& t) { return khomm(s, t, idx, KernelConfig{0.4, 1}); }},
        {"mmd",
         [](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return linear_mmd_grad(s, t, gs, gt);
         },
         [](const Matrix& s, const Matrix& t) { return linear_mmd(s, t); }},
        {"gram",
         [](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return gram_loss_grad(s, t, false, gs, gt);
         },
         [](const Matrix& s, const Matrix& t) { return gram_loss(s, t, false); }},
        {"coral",
         [](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             return gram_loss_grad(s, t, true, gs, gt);
         },
         [](const Matrix& s, const Matrix& t) { return gram_loss(s, t, true); }},
        {"clustering",
         [&](const Matrix& s, const Matrix& t, Matrix& gs, Matrix& gt) {
             gs = Matrix::Zero(s.rows(), s.cols());
             return clustering_loss_grad(t, assignment, centers, gt);
         },
         [&](const Matrix&, const Matrix& t) { return clustering_loss(t, assignment, centers); }},
    };

    const double h = 1e-6;
    for (const Case& test_case : cases) {
        const std::string case_name = test_case.name;
        CAPTURE(case_name);
        Matrix gs, gt;
        const double value = test_case.grad(source, target, gs, gt);
        CHECK(value == doctest::Approx(test_case.value(source, target)).epsilon(1e-12));
        for (Eigen::Index i = 0; i < b; ++i) {
            for (Eigen::Index j = 0; j < width; ++j) {
                Matrix sp = source, sm = source;
                sp(i, j) += h;
                sm(i, j) -= h;
                const double numeric =
                    (test_case.value(sp, target) - test_case.value(sm, target)) / (2.0 * h);
                CHECK(gs(i, j) == doctest::Approx(numeric).epsilon(5e-5));

                Matrix tp = target, tm = target;
                tp(i, j) += h;
                tm(i, j) -= h;
                const double numeric_t =
                    (test_case.value(source, tp) - test_case.value(source, tm)) / (2.0 * h);
                CHECK(gt(i, j) == doctest::Approx(numeric_t).epsilon(5e-5));
            }
        }
    }
}
