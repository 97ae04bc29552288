#include <doctest.h>

#include "helpers.hpp"
#include "mixpipe/similarity.hpp"

using namespace mixpipe;

TEST_CASE("cosine of identical, orthogonal and scaled vectors") {
    std::vector<float> e1{1.0f, 0.0f}, e2{0.0f, 1.0f}, e1x2{2.0f, 0.0f};
    CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_similarity(e1x2, e1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("near-zero vectors are an error, not zero") {
    std::vector<float> z{0.0f, 0.0f}, e1{1.0f, 0.0f};
    try {
        cosine_similarity(z, e1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ZeroNormVector);
    }
    CHECK_THROWS_AS(cosine_similarity(e1, z), Error);
}

TEST_CASE("mismatched lengths are rejected") {
    std::vector<float> a{1.0f, 0.0f}, b{1.0f, 0.0f, 0.0f};
    try {
        cosine_similarity(a, b);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ShapeMismatch);
    }
}

TEST_CASE("pairwise similarity on basis rows and on a single row") {
    EmbeddingMatrix A(2);
    A.append_row(std::vector<float>{1.0f, 0.0f});
    A.append_row(std::vector<float>{0.0f, 1.0f});
    const MatrixD S = pairwise_similarity(A, A);
    CHECK(S.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(S.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(S.at(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(S.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));

    EmbeddingMatrix one(2);
    one.append_row(std::vector<float>{1.0f, 1.0f});
    const MatrixD S1 = pairwise_similarity(one, one);
    CHECK(S1.rows == 1);
    CHECK(S1.cols == 1);
    CHECK(S1.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("random pairwise matrix matches the scalar oracle entry by entry") {
    std::mt19937_64 rng(42);
    const EmbeddingMatrix A = testutil::random_matrix(5, 8, rng);
    const EmbeddingMatrix B = testutil::random_matrix(7, 8, rng);
    const MatrixD S = pairwise_similarity(A, B);
    REQUIRE(S.rows == 5);
    REQUIRE(S.cols == 7);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 7; ++j) {
            const double want = static_cast<double>(testutil::oracle_cosine(A.row(i), B.row(j)));
            CHECK(S.at(i, j) == doctest::Approx(want).epsilon(1e-10));
        }
}

TEST_CASE("similarity is symmetric, bounded, and transpose-consistent") {
    std::mt19937_64 rng(7);
    const EmbeddingMatrix A = testutil::random_matrix(6, 5, rng);
    const EmbeddingMatrix B = testutil::random_matrix(9, 5, rng);
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < B.rows(); ++j) {
            const double ab = cosine_similarity(A.row(i), B.row(j));
            const double ba = cosine_similarity(B.row(j), A.row(i));
            CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
            CHECK(std::abs(ab) <= 1.0 + 1e-6);
        }
    const MatrixD S = pairwise_similarity(A, B);
    const MatrixD T = pairwise_similarity(B, A);
    for (std::size_t i = 0; i < S.rows; ++i)
        for (std::size_t j = 0; j < S.cols; ++j)
            CHECK(S.at(i, j) == doctest::Approx(T.at(j, i)).epsilon(1e-6));
}

TEST_CASE("pairwise reports the offending zero-norm row") {
    EmbeddingMatrix A(3);
    A.append_row(std::vector<float>{1.0f, 0.0f, 0.0f});
    A.append_row(std::vector<float>{0.0f, 0.0f, 0.0f});
    EmbeddingMatrix B(3);
    B.append_row(std::vector<float>{0.0f, 1.0f, 0.0f});
    try {
        pairwise_similarity(A, B);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ZeroNormVector);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
    try {
        pairwise_similarity(B, A);  // zero row on the right-hand side
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ZeroNormVector);
    }
}

TEST_CASE("dim mismatch between matrices is rejected") {
    std::mt19937_64 rng(3);
    const EmbeddingMatrix A = testutil::random_matrix(2, 4, rng);
    const EmbeddingMatrix B = testutil::random_matrix(2, 5, rng);
    try {
        pairwise_similarity(A, B);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DimMismatch);
    }
}
