#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "numerics.hpp"
#include "oracles.hpp"
#include "rescale.hpp"

using namespace karst;

TEST_CASE("apply: zero-initialized params are the identity") {
    SeededRng rng(1);
    const RescaleParams p(6);
    const DenseVector z = gaussian_vector(rng, 6, 1.0);
    const DenseVector y = rescale_apply(p, z);
    for (index_t i = 0; i < 6; ++i) CHECK(y[i] == z[i]);
    CHECK(p.is_zero());
}

TEST_CASE("apply: all-ones scale doubles the input") {
    const RescaleParams p(DenseVector({1, 1, 1}), DenseVector(3));
    const DenseVector z(std::vector<double>{2, -3, 0.5});
    const DenseVector y = rescale_apply(p, z);
    CHECK(y[0] == 4.0);
    CHECK(y[1] == -6.0);
    CHECK(y[2] == 1.0);
}

TEST_CASE("apply: random params match the scalar-loop oracle exactly") {
    SeededRng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const RescaleParams p(gaussian_vector(rng, 9, 0.5), gaussian_vector(rng, 9, 0.5));
        const DenseVector z = gaussian_vector(rng, 9, 2.0);
        const DenseVector expected = oracle::elementwise_rescale(p.s1, p.s2, z);
        CHECK(max_abs_diff(rescale_apply(p, z), expected) == 0.0);
    }
}

TEST_CASE("apply: length mismatch") {
    const RescaleParams p(4);
    CHECK_THROWS_AS(rescale_apply(p, DenseVector(5)), std::invalid_argument);
}

TEST_CASE("fold: zero params return weight and bias unchanged") {
    SeededRng rng(5);
    const DenseMatrix w = gaussian_matrix(rng, 5, 4, 1.0);
    const DenseVector bias = gaussian_vector(rng, 4, 1.0);
    const FoldedAffine folded = rescale_fold(RescaleParams(4), w, bias);
    CHECK(folded.w.data == w.data);
    CHECK(folded.bias.data == bias.data);
}

TEST_CASE("fold: folded affine equals apply-after-affine on random inputs") {
    SeededRng rng(7);
    const DenseMatrix w = gaussian_matrix(rng, 8, 5, 1.0);
    const DenseVector bias = gaussian_vector(rng, 5, 1.0);
    const RescaleParams p(gaussian_vector(rng, 5, 0.4), gaussian_vector(rng, 5, 0.4));
    const FoldedAffine folded = rescale_fold(p, w, bias);
    for (int trial = 0; trial < 100; ++trial) {
        const DenseVector x = gaussian_vector(rng, 8, 1.0);
        const DenseVector two_step = rescale_apply(p, add(matvec_t(w, x), bias));
        const DenseVector one_step = add(matvec_t(folded.w, x), folded.bias);
        CHECK(rel_error(one_step, two_step) <= 1e-12);
    }
}

TEST_CASE("fold: absent bias with nonzero shift returns s2 as the bias") {
    SeededRng rng(9);
    const DenseMatrix w = gaussian_matrix(rng, 6, 3, 1.0);
    const DenseVector s2 = gaussian_vector(rng, 3, 1.0);
    const FoldedAffine folded = rescale_fold(RescaleParams(DenseVector(3), s2), w, std::nullopt);
    CHECK(folded.bias.data == s2.data);
}

TEST_CASE("fold: shape mismatches") {
    const DenseMatrix w(6, 3);
    CHECK_THROWS_AS(rescale_fold(RescaleParams(4), w, std::nullopt), std::invalid_argument);
    CHECK_THROWS_AS(rescale_fold(RescaleParams(3), w, DenseVector(5)), std::invalid_argument);
}

TEST_CASE("fold: composing two folds equals folding composed params") {
    SeededRng rng(11);
    const DenseMatrix w = gaussian_matrix(rng, 7, 4, 1.0);
    const DenseVector bias = gaussian_vector(rng, 4, 1.0);
    const RescaleParams p(gaussian_vector(rng, 4, 0.3), gaussian_vector(rng, 4, 0.3));
    const RescaleParams q(gaussian_vector(rng, 4, 0.3), gaussian_vector(rng, 4, 0.3));

    const FoldedAffine once = rescale_fold(p, w, bias);
    const FoldedAffine twice = rescale_fold(q, once.w, once.bias);

    // (1 + s1'') = (1 + s1)(1 + s1'), s2'' = (1 + s1') .* s2 + s2'.
    DenseVector s1_comp(4), s2_comp(4);
    for (index_t j = 0; j < 4; ++j) {
        s1_comp[j] = (1.0 + p.s1[j]) * (1.0 + q.s1[j]) - 1.0;
        s2_comp[j] = (1.0 + q.s1[j]) * p.s2[j] + q.s2[j];
    }
    const FoldedAffine composed = rescale_fold(RescaleParams(s1_comp, s2_comp), w, bias);
    CHECK(rel_error(twice.w, composed.w) <= 1e-12);
    CHECK(rel_error(twice.bias, composed.bias) <= 1e-12);
}
