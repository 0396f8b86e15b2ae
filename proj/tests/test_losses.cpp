#include <cmath>
#include <random>

#include "abc/losses.hpp"
#include "doctest.h"

using namespace abc;

namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                    double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Matrix m(rows, cols);
    for (double& x : m.data) x = gauss(rng);
    return m;
}

// central finite differences of fn over every entry of x
template <typename Fn>
Matrix fd_grad(Matrix x, Fn fn, double h = 1e-6) {
    Matrix g(x.rows, x.cols);
    for (std::size_t k = 0; k < x.data.size(); ++k) {
        const double orig = x.data[k];
        x.data[k] = orig + h;
        const double lp = fn(x);
        x.data[k] = orig - h;
        const double lm = fn(x);
        x.data[k] = orig;
        g.data[k] = (lp - lm) / (2 * h);
    }
    return g;
}

double max_rel_err(const Matrix& a, const Matrix& b) {
    double e = 0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double denom = std::max({std::abs(a.data[k]), std::abs(b.data[k]), 1e-8});
        e = std::max(e, std::abs(a.data[k] - b.data[k]) / denom);
    }
    return e;
}

}  // namespace

TEST_CASE("euclidean distance") {
    CHECK(euclidean({0, 0}, {3, 4}) == doctest::Approx(5.0));
    CHECK(euclidean({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0).epsilon(1e-5));
    CHECK_THROWS_AS(euclidean({1}, {1, 2}), Error);
    // two-bit Hamming difference at lambda=1 is distance sqrt(2)
    CHECK(euclidean({1, 0, 1, 0}, {0, 1, 1, 0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("triplet_loss values") {
    // margin satisfied: d(a,p)=0.2, d(a,n)=0.5, alpha=0.2
    TripletBatch b{Matrix(1, 1), Matrix(1, 1), Matrix(1, 1)};
    b.anchors.data[0] = 0.0;
    b.positives.data[0] = 0.2;
    b.negatives.data[0] = 0.5;
    CHECK(triplet_loss(b, 0.2).first == doctest::Approx(0.0));
    // active: d(a,p)=0.5, d(a,n)=0.4, alpha=0.3 -> 0.4
    b.positives.data[0] = 0.5;
    b.negatives.data[0] = 0.4;
    CHECK(triplet_loss(b, 0.3).first == doctest::Approx(0.4).epsilon(1e-5));
}

TEST_CASE("triplet_loss is non-negative, zero iff all margins satisfied") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        TripletBatch b{random_batch(5, 4, rng), random_batch(5, 4, rng),
                       random_batch(5, 4, rng)};
        auto [loss, grads] = triplet_loss(b, 0.3);
        CHECK(loss >= 0.0);
        bool all_satisfied = true;
        for (std::size_t i = 0; i < 5; ++i) {
            const double dap = euclidean(
                RealVector(b.anchors.row(i), b.anchors.row(i) + 4),
                RealVector(b.positives.row(i), b.positives.row(i) + 4));
            const double dan = euclidean(
                RealVector(b.anchors.row(i), b.anchors.row(i) + 4),
                RealVector(b.negatives.row(i), b.negatives.row(i) + 4));
            if (dan < dap + 0.3) all_satisfied = false;
        }
        CHECK((loss == 0.0) == all_satisfied);
    }
}

TEST_CASE("triplet_loss gradients match finite differences") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        TripletBatch b{random_batch(4, 6, rng), random_batch(4, 6, rng),
                       random_batch(4, 6, rng)};
        auto [loss, grads] = triplet_loss(b, 0.5);
        auto loss_a = [&](const Matrix& a) {
            return triplet_loss(TripletBatch{a, b.positives, b.negatives}, 0.5).first;
        };
        auto loss_p = [&](const Matrix& p) {
            return triplet_loss(TripletBatch{b.anchors, p, b.negatives}, 0.5).first;
        };
        auto loss_n = [&](const Matrix& n) {
            return triplet_loss(TripletBatch{b.anchors, b.positives, n}, 0.5).first;
        };
        CHECK(max_rel_err(grads.anchors, fd_grad(b.anchors, loss_a)) < 1e-4);
        CHECK(max_rel_err(grads.positives, fd_grad(b.positives, loss_p)) < 1e-4);
        CHECK(max_rel_err(grads.negatives, fd_grad(b.negatives, loss_n)) < 1e-4);
    }
}

TEST_CASE("critic_objective") {
    auto obj = critic_objective({1, 1}, {0, 0});
    CHECK(obj.value == doctest::Approx(1.0));
    CHECK(critic_objective({0.3, 0.3}, {0.3, 0.3}).value == doctest::Approx(0.0));
    CHECK_THROWS_AS(critic_objective({}, {1.0}), Error);

    // antisymmetric under swapping real/fake
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss;
    std::vector<double> r(7), f(5);
    for (double& x : r) x = gauss(rng);
    for (double& x : f) x = gauss(rng);
    CHECK(critic_objective(r, f).value == doctest::Approx(-critic_objective(f, r).value));

    // closed-form gradients and fd agreement
    obj = critic_objective(r, f);
    for (double g : obj.grad_real) CHECK(g == doctest::Approx(1.0 / 7.0));
    for (double g : obj.grad_fake) CHECK(g == doctest::Approx(-1.0 / 5.0));
    const double h = 1e-6;
    auto rp = r;
    rp[2] += h;
    auto rm = r;
    rm[2] -= h;
    const double fd =
        (critic_objective(rp, f).value - critic_objective(rm, f).value) / (2 * h);
    CHECK(fd == doctest::Approx(obj.grad_real[2]).epsilon(1e-5));
}

TEST_CASE("generator_objective") {
    auto [v, g] = generator_objective({0.5});
    CHECK(v == doctest::Approx(-0.5));
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK_THROWS_AS(generator_objective({}), Error);

    // constant shift moves the value, leaves the gradient unchanged
    auto [v1, g1] = generator_objective({0.1, 0.2, 0.3});
    auto [v2, g2] = generator_objective({1.1, 1.2, 1.3});
    CHECK(v2 == doctest::Approx(v1 - 1.0));
    CHECK(g1 == g2);
    for (double x : g1) CHECK(x == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("cross_entropy") {
    Matrix logits(1, 4);  // uniform
    auto [loss, grad] = cross_entropy(logits, {2});
    CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-6));

    // strongly correct logit drives the loss toward 0
    logits.at(0, 2) = 50.0;
    CHECK(cross_entropy(logits, {2}).first < 1e-9);

    CHECK_THROWS_AS(cross_entropy(logits, {7}), Error);

    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix l = random_batch(3, 5, rng);
        std::vector<uint32_t> labels = {1, 4, 0};
        auto [v, g] = cross_entropy(l, labels);
        auto fn = [&](const Matrix& x) { return cross_entropy(x, labels).first; };
        CHECK(max_rel_err(g, fd_grad(l, fn)) < 1e-4);
    }
}

TEST_CASE("margin_at follows the ladder") {
    MarginSchedule cuhk{{{0, 0.2}, {1000, 0.3}, {2500, 0.4}, {4000, 0.5}}};
    CHECK(margin_at(cuhk, 0) == 0.2);
    CHECK(margin_at(cuhk, 999) == 0.2);
    CHECK(margin_at(cuhk, 2500) == 0.4);
    CHECK(margin_at(cuhk, 5999) == 0.5);

    // non-decreasing over the whole range
    double prev = 0.0;
    for (uint64_t it = 0; it < 6000; it += 50) {
        const double a = margin_at(cuhk, it);
        CHECK(a >= prev);
        prev = a;
    }

    MarginSchedule bad{{{5, 0.2}}};
    CHECK_THROWS_AS(margin_at(bad, 0), Error);
}

TEST_CASE("scaled default ladder hits the documented points") {
    auto s = MarginSchedule::scaled_default(6000);
    CHECK(margin_at(s, 0) == 0.2);
    CHECK(margin_at(s, 1000) == 0.3);
    CHECK(margin_at(s, 2500) == 0.4);
    CHECK(margin_at(s, 4000) == 0.5);
    auto small = MarginSchedule::scaled_default(2000);
    CHECK(margin_at(small, 0) == 0.2);
    CHECK(margin_at(small, 1999) == 0.5);
}
