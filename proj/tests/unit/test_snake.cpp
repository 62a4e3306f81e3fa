#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "synth.hpp"
#include "whistle/error.hpp"
#include "whistle/snake.hpp"

using namespace whistle;

namespace {

SnakeConfig internal_only(double alpha, double beta) {
    SnakeConfig cfg;
    cfg.alpha = alpha;
    cfg.beta_bend = beta;
    cfg.w_line = 0.0;
    cfg.w_edge = 0.0;
    return cfg;
}

Spectrogram image_of(GridXd g) {
    Spectrogram s;
    s.intensity = std::move(g);
    return s;
}

Snake snake_from(const PointList<double>& pts) {
    Snake s;
    s.points = pts;
    return s;
}

}  // namespace

TEST_CASE("init_snake fixtures") {
    LineSegment seg;
    seg.p0 = {0, 0};
    seg.p1 = {49, 0};
    const Snake s = init_snake(seg, 50);
    REQUIRE(s.size() == 50);
    for (int i = 0; i < 50; ++i) {
        CHECK(s.points(i, 0) == doctest::Approx(i));
        CHECK(s.points(i, 1) == 0.0);
    }
    seg.p1 = {3, 4};
    const Snake two = init_snake(seg, 2);
    REQUIRE(two.size() == 2);
    CHECK(two.points(0, 0) == 0.0);
    CHECK(two.points(1, 0) == 3.0);
    CHECK(two.points(1, 1) == 4.0);
    seg.p1 = {10, 10};
    const Snake diag = init_snake(seg, 50);
    const double d0 = (diag.points.row(1) - diag.points.row(0)).norm();
    for (int i = 1; i < 50; ++i) CHECK(std::abs((diag.points.row(i) - diag.points.row(i - 1)).norm() - d0) < 1e-9);
    seg.p1 = seg.p0;
    CHECK_THROWS_AS(init_snake(seg, 10), InputError);
}

TEST_CASE("energy fixtures") {
    const Spectrogram flat = image_of(GridXd::Constant(60, 60, 0.3));
    {
        LineSegment seg;
        seg.p0 = {2, 3};
        seg.p1 = {40, 30};
        const Snake s = init_snake(seg, 20);
        const double d = (s.points.row(1) - s.points.row(0)).norm();
        CHECK(snake_energy(s, flat, internal_only(0.7, 0.0)) == doctest::Approx(0.5 * 0.7 * 19 * d * d));
    }
    {
        const Spectrogram white = image_of(GridXd::Ones(30, 30));
        SnakeConfig cfg = internal_only(0.0, 0.0);
        cfg.w_line = 1.0;
        PointList<double> pts(7, 2);
        pts << 1, 1, 3.5, 2, 7, 9.25, 12, 4, 20, 20, 29, 0, 0, 29;
        CHECK(snake_energy(snake_from(pts), white, cfg) == doctest::Approx(7.0));
    }
    {
        PointList<double> pts(3, 2);
        pts << 0, 0, 1, 1, 2, 0;
        CHECK(snake_energy(snake_from(pts), flat, internal_only(0.0, 1.0)) == doctest::Approx(2.0));
    }
}

TEST_CASE("energy rejects points outside the image") {
    PointList<double> pts(3, 2);
    pts << 0, 0, 5, 5, 10.5, 2;
    CHECK_THROWS_AS(snake_energy(snake_from(pts), image_of(GridXd::Ones(10, 10)), SnakeConfig{}), InputError);
}

TEST_CASE("stiffness matrix reproduces the internal energy quadratic form") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0, 50);
    for (int n : {3, 4, 10, 50}) {
        PointList<double> p(n, 2);
        for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(gen);
        const auto k = stiffness_matrix<double>(n, 0.3, 0.05);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(0.5 * (p.transpose() * k * p).trace() == doctest::Approx(internal_energy(p, 0.3, 0.05)).epsilon(1e-12));
    }
}

TEST_CASE("analytic internal gradient matches central differences on 100 random snakes") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> coord(5.0, 95.0), weight(0.001, 2.0);
    std::uniform_int_distribution<int> count(3, 60);
    const GridXd blank = GridXd::Zero(101, 101);
    int worst_case = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = count(gen);
        PointList<double> p(n, 2);
        for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = coord(gen);
        const SnakeConfig cfg = internal_only(weight(gen), weight(gen));
        const PointList<double> g = internal_energy_gradient(p, cfg.alpha, cfg.beta_bend);
        const double h = 1e-4;
        PointList<double> fd(n, 2);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            PointList<double> a = p, b = p;
            a(i) += h;
            b(i) -= h;
            fd(i) = (snake_energy(a, blank, cfg) - snake_energy(b, blank, cfg)) / (2 * h);
        }
        const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-12);
        if (rel > worst) {
            worst = rel;
            worst_case = trial;
        }
    }
    INFO("worst trial " << worst_case);
    CHECK(worst < 1e-4);
}

TEST_CASE("internal energy alone straightens to the equally spaced chord") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> jitter(-6.0, 6.0);
    const GridXd blank = GridXd::Zero(120, 120);
    for (int trial = 0; trial < 5; ++trial) {
        LineSegment seg;
        seg.p0 = {10 + trial, 15};
        seg.p1 = {100, 90 - 5 * trial};
        const Snake straight = init_snake(seg, 30);
        Snake s = straight;
        for (Eigen::Index i = 1; i + 1 < s.size(); ++i) {
            s.points(i, 0) += jitter(gen);
            s.points(i, 1) += jitter(gen);
        }
        SnakeConfig cfg = internal_only(0.01, 0.0);
        cfg.max_iterations = 2000;
        EvolveTrace trace;
        const Snake out = evolve(s, blank, cfg, &trace);
        CHECK(out.converged);
        CHECK((out.points - straight.points).rowwise().norm().maxCoeff() < 0.1);
        for (std::size_t k = 1; k < trace.energies.size(); ++k) CHECK(trace.energies[k] <= trace.energies[k - 1]);
    }
}

TEST_CASE("snake on the centerline of a straight ridge barely moves") {
    const GridXd img = synth::dark_line(120, 100, {10, 20}, {110, 80}, 2.0);
    LineSegment seg;
    seg.p0 = {10, 20};
    seg.p1 = {110, 80};
    const Snake s = init_snake(seg, 50);
    const Snake out = evolve(s, image_of(img), SnakeConfig{});
    CHECK((out.points - s.points).rowwise().norm().maxCoeff() < 0.5);
    // perturbed copies have higher energy
    const double e = snake_energy(out, image_of(img), SnakeConfig{});
    for (double off : {-1.0, 1.0}) {
        Snake p = out;
        p.points.middleRows(1, 48).col(1).array() += off;
        CHECK(snake_energy(p, image_of(img), SnakeConfig{}) > e);
    }
}

TEST_CASE("tracks a sinusoidal ridge of amplitude 8 px") {
    const synth::SineRidge ridge{64.0, 8.0, 160.0, 20, 180};
    const GridXd img = synth::sine_ridge_image(200, 129, ridge, 3.0);
    PointList<double> pts(50, 2);
    for (int i = 0; i < 50; ++i) {
        const double x = ridge.x0 + (ridge.x1 - ridge.x0) * i / 49.0;
        pts(i, 0) = x;
        pts(i, 1) = ridge.y(ridge.x0) + (ridge.y(ridge.x1) - ridge.y(ridge.x0)) * i / 49.0;
    }
    EvolveTrace trace;
    SnakeConfig cfg;
    const Snake out = evolve(snake_from(pts), image_of(img), cfg, &trace);
    std::vector<Eigen::Vector2d> center;
    for (double x = ridge.x0; x <= ridge.x1; x += 0.25) center.emplace_back(x, ridge.y(x));
    const double before = synth::mean_distance_to(pts, center);
    const double after = synth::mean_distance_to(out.points, center);
    CHECK(before > 4.0);
    CHECK(after < 1.5);
    for (std::size_t k = 1; k < trace.energies.size(); ++k) CHECK(trace.energies[k] <= trace.energies[k - 1]);
}

TEST_CASE("monotone energy, fixed endpoints, in-bounds points on random images") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0;
    for (int trial = 0; trial < 20; ++trial) {
        GridXd img(80, 60);
        for (Eigen::Index i = 0; i < img.size(); ++i) img(i) = u(gen);
        LineSegment seg;
        seg.p0 = {static_cast<int>(u(gen) * 79), static_cast<int>(u(gen) * 59)};
        seg.p1 = {static_cast<int>(u(gen) * 79), static_cast<int>(u(gen) * 59)};
        if (seg.p0 == seg.p1) continue;
        SnakeConfig cfg;
        cfg.w_edge = trial % 2 == 0 ? 0.0 : 0.5;
        const Snake s = init_snake(seg, 25);
        EvolveTrace trace;
        const Snake out = evolve(s, image_of(img), cfg, &trace);
        for (std::size_t k = 1; k < trace.energies.size(); ++k) violations += trace.energies[k] > trace.energies[k - 1];
        CHECK(trace.energies.size() == static_cast<std::size_t>(out.iterations) + 1);
        CHECK(out.points.row(0) == s.points.row(0));
        CHECK(out.points.row(24) == s.points.row(24));
        CHECK((out.points.col(0).array() >= 0).all());
        CHECK((out.points.col(0).array() <= 79).all());
        CHECK((out.points.col(1).array() >= 0).all());
        CHECK((out.points.col(1).array() <= 59).all());
        CHECK(out.energy == doctest::Approx(snake_energy(out, image_of(img), cfg)).epsilon(1e-12));
    }
    CHECK(violations == 0);
}

TEST_CASE("edge potential uses central differences") {
    GridXd img(5, 5);
    for (int x = 0; x < 5; ++x) {
        for (int y = 0; y < 5; ++y) img(x, y) = 0.1 * x * x + 0.2 * y;
    }
    const GridXd p = image_potential(img, 0.0, 1.0);
    const double gx = (img(3, 2) - img(1, 2)) / 2, gy = (img(2, 3) - img(2, 1)) / 2;
    CHECK(p(2, 2) == doctest::Approx(gx * gx + gy * gy));
    CHECK((image_potential(img, 2.0, 0.0) == 2.0 * img).all());
}

TEST_CASE("dedupe keeps the lower-energy snake of a near pair") {
    LineSegment seg;
    seg.p0 = {0, 0};
    seg.p1 = {40, 20};
    Snake a = init_snake(seg, 10);
    Snake b = a;
    b.points.col(1).array() += 2.0;
    Snake c = a;
    c.points.col(1).array() += 30.0;
    a.energy = 5.0;
    b.energy = 3.0;
    c.energy = 9.0;
    Snake reversed = b;
    reversed.points = b.points.colwise().reverse();
    CHECK(mean_point_distance(b, reversed) == 0.0);
    CHECK(mean_point_distance(a, b) == doctest::Approx(2.0));
    const auto kept = dedupe_snakes({a, b, c}, 5.0);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].energy == 3.0);
    CHECK(kept[1].energy == 9.0);
    CHECK(dedupe_snakes({a, b, c}, 1.0).size() == 3);
}

TEST_CASE("config validation") {
    SnakeConfig cfg;
    cfg.n_points = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SnakeConfig{};
    cfg.alpha = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SnakeConfig{};
    cfg.step_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
