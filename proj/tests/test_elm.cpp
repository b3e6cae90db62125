#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ser3d/elm.hpp"
#include "ser3d/rng.hpp"

using namespace ser3d;

namespace {

Tensor<float> probs_rows(const std::vector<std::array<float, 4>>& rows) {
    Tensor<float> t({static_cast<int>(rows.size()), 4});
    for (std::size_t l = 0; l < rows.size(); ++l)
        for (int k = 0; k < 4; ++k) t.at({static_cast<int>(l), k}) = rows[l][static_cast<std::size_t>(k)];
    return t;
}

// Two-class toy set, linearly separable by the first coordinate.
void separable_set(std::vector<std::vector<double>>& features, std::vector<int>& labels, int n, Rng& rng) {
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        std::vector<double> f(16);
        for (auto& v : f) v = rng.uniform(-0.1, 0.1);
        f[0] += label == 0 ? -1.0 : 1.0;
        features.push_back(std::move(f));
        labels.push_back(label);
    }
}

}  // namespace

TEST_CASE("functionals: uniform steps give (.25,.25,.25,1.0) per class") {
    Tensor<float> probs = probs_rows(std::vector<std::array<float, 4>>(10, {0.25f, 0.25f, 0.25f, 0.25f}));
    auto feat = functionals(probs);
    REQUIRE(feat.size() == 16);
    for (int k = 0; k < 4; ++k) {
        CHECK(feat[k * 4 + 0] == doctest::Approx(0.25));
        CHECK(feat[k * 4 + 1] == doctest::Approx(0.25));
        CHECK(feat[k * 4 + 2] == doctest::Approx(0.25));
        CHECK(feat[k * 4 + 3] == doctest::Approx(1.0));  // .25 > .2 at every step
    }
}

TEST_CASE("functionals: one-hot class 0 everywhere") {
    Tensor<float> probs = probs_rows(std::vector<std::array<float, 4>>(10, {1.0f, 0.0f, 0.0f, 0.0f}));
    auto feat = functionals(probs);
    CHECK(feat[0] == 1.0);
    CHECK(feat[1] == 1.0);
    CHECK(feat[2] == 1.0);
    CHECK(feat[3] == 1.0);
    for (int k = 1; k < 4; ++k)
        for (int f = 0; f < 4; ++f) CHECK(feat[k * 4 + f] == 0.0);
}

TEST_CASE("functionals: alternating [.6,.4,0,0]/[.4,.6,0,0] gives class 0 (.6,.4,.5,1.0)") {
    std::vector<std::array<float, 4>> rows;
    for (int l = 0; l < 10; ++l)
        rows.push_back(l % 2 == 0 ? std::array<float, 4>{0.6f, 0.4f, 0.0f, 0.0f}
                                  : std::array<float, 4>{0.4f, 0.6f, 0.0f, 0.0f});
    auto feat = functionals(probs_rows(rows));
    CHECK(feat[0] == doctest::Approx(0.6));
    CHECK(feat[1] == doctest::Approx(0.4));
    CHECK(feat[2] == doctest::Approx(0.5));
    CHECK(feat[3] == doctest::Approx(1.0));
}

TEST_CASE("functionals: permutation-equivariance in steps; non-probability rows rejected") {
    Rng rng(3);
    std::vector<std::array<float, 4>> rows;
    for (int l = 0; l < 10; ++l) {
        std::array<float, 4> r;
        float sum = 0.0f;
        for (auto& v : r) {
            v = static_cast<float>(rng.uniform(0.01, 1.0));
            sum += v;
        }
        for (auto& v : r) v /= sum;
        rows.push_back(r);
    }
    auto base = functionals(probs_rows(rows));
    std::reverse(rows.begin(), rows.end());
    auto shuffled = functionals(probs_rows(rows));
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i] == doctest::Approx(shuffled[i]).epsilon(1e-6));

    CHECK_THROWS_AS(functionals(probs_rows({{0.9f, 0.9f, 0.9f, 0.9f}})), DataError);
}

TEST_CASE("elm_train: separable toy set reaches training accuracy 1.0") {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    Rng rng(7);
    separable_set(features, labels, 40, rng);
    ElmModel m = elm_train(features, labels, 2, 64, 1e-3, 11);
    int correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (elm_predict(m, features[i]) == labels[i]) ++correct;
    CHECK(correct == 40);
}

TEST_CASE("elm_train: huge lambda collapses output weights toward zero") {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    Rng rng(13);
    separable_set(features, labels, 30, rng);
    ElmModel m = elm_train(features, labels, 2, 32, 1e12, 17);
    CHECK(m.output_weights.cwiseAbs().maxCoeff() < 1e-6);
    // Predictions collapse to one constant class.
    const int first = elm_predict(m, features[0]);
    for (const auto& f : features) CHECK(elm_predict(m, f) == first);
}

TEST_CASE("elm_train: same seed twice gives an identical model") {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    Rng rng(19);
    separable_set(features, labels, 20, rng);
    ElmModel a = elm_train(features, labels, 2, 32, 1e-3, 23);
    ElmModel b = elm_train(features, labels, 2, 32, 1e-3, 23);
    CHECK(a.input_weights == b.input_weights);
    CHECK(a.hidden_bias == b.hidden_bias);
    CHECK(a.output_weights == b.output_weights);
}

TEST_CASE("elm_train: missing class and mismatched lengths are rejected") {
    std::vector<std::vector<double>> features{{1.0, 2.0}, {3.0, 4.0}};
    CHECK_THROWS_AS(elm_train(features, {0, 0}, 2), DataError);           // class 1 absent
    CHECK_THROWS_AS(elm_train(features, {0}, 2), DataError);              // length mismatch
    ElmModel m = elm_train(features, {0, 1}, 2, 8, 1e-3, 1);
    CHECK_THROWS_AS(elm_predict(m, {1.0, 2.0, 3.0}), DimensionError);     // feature length guard
}

TEST_CASE("elm interpolates any consistent small dataset with H >= n and tiny lambda") {
    Rng rng(29);
    for (int n : {10, 30, 50}) {
        std::vector<std::vector<double>> features;
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) {
            std::vector<double> f(8);
            for (auto& v : f) v = rng.uniform(-2.0, 2.0);
            features.push_back(std::move(f));
            labels.push_back(i % 3);
        }
        ElmModel m = elm_train(features, labels, 3, std::max(64, 2 * n), 1e-6, 31);
        int correct = 0;
        for (int i = 0; i < n; ++i)
            if (elm_predict(m, features[static_cast<std::size_t>(i)]) == labels[static_cast<std::size_t>(i)]) ++correct;
        CHECK(correct == n);
    }
}

TEST_CASE("elm_predict: zero feature with zero output weights ties to class 0") {
    std::vector<std::vector<double>> features{{1.0, 0.0}, {0.0, 1.0}};
    ElmModel m = elm_train(features, {0, 1}, 2, 8, 1e12, 37);  // weights ~ 0
    CHECK(elm_predict(m, {0.0, 0.0}) == 0);
}
