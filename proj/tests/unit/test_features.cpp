#include <doctest.h>

#include <random>
#include <sstream>

#include "synth.hpp"
#include "whistle/error.hpp"
#include "whistle/features.hpp"

using namespace whistle;

namespace {

Snake snake_of(std::initializer_list<std::pair<double, double>> pts) {
    Snake s;
    s.points.resize(static_cast<Eigen::Index>(pts.size()), 2);
    Eigen::Index i = 0;
    for (auto [x, y] : pts) {
        s.points(i, 0) = x;
        s.points(i, 1) = y;
        ++i;
    }
    return s;
}

Spectrogram image_of(GridXd g) {
    Spectrogram s;
    s.intensity = std::move(g);
    return s;
}

}  // namespace

TEST_CASE("centroid fixtures") {
    Snake s;
    s.points.resize(50, 2);
    s.points.col(0).setConstant(3);
    s.points.col(1).setConstant(4);
    CHECK(centroid(s) == Eigen::Vector2d(3, 4));
    CHECK(centroid(snake_of({{8, 18}, {12, 22}, {10, 25}, {10, 15}})) == Eigen::Vector2d(10, 20));
    CHECK(centroid(snake_of({{0, 0}, {2, 0}, {4, 6}})) == Eigen::Vector2d(2, 2));
}

TEST_CASE("normalized length fixtures") {
    CHECK(normalized_length(snake_of({{0, 0}, {1, 9}, {3, 4}}), 1.0) == 5.0);
    CHECK(normalized_length(snake_of({{0, 0}, {3, 4}}), 5.0) == 1.0);
    CHECK(normalized_length(snake_of({{1, 1}, {4, 5}}), 2.5) == 2.0);
    CHECK_THROWS_AS(normalized_length(snake_of({{1, 1}, {4, 5}}), 0.0), InputError);
}

TEST_CASE("inertia fixtures") {
    const auto white = image_of(GridXd::Ones(10, 10));
    CHECK(inertia(snake_of({{1, 4}, {5, 4}, {9, 4}}), white) == 0.0);
    CHECK(inertia(snake_of({{1, 1}, {2, 5}, {3, 8}}), image_of(GridXd::Zero(10, 10))) == 0.0);
    CHECK(inertia(snake_of({{1, 0}, {1, 1}, {1, 2}}), white) == 2.0);
}

TEST_CASE("avg and relative mass fixtures") {
    CHECK(avg_mass(snake_of({{1, 1}, {3, 2}}), image_of(GridXd::Ones(5, 5))) == 1.0);
    CHECK(avg_mass(snake_of({{1, 1}, {3, 2}}), image_of(GridXd::Zero(5, 5))) == 0.0);
    GridXd g = GridXd::Constant(4, 4, 1.0);
    g(0, 0) = 0.2;
    g(1, 0) = 0.4;
    g(2, 0) = 0.6;
    CHECK(avg_mass(snake_of({{0, 0}, {1, 0}, {2, 0}}), image_of(g)) == doctest::Approx(0.4));
    CHECK(relative_mass(snake_of({{1, 1}, {2, 3}}), image_of(GridXd::Constant(6, 6, 0.37))) == doctest::Approx(1.0));

    // snake mean 0.4 on an image of mean 0.8
    GridXd h(2, 5);
    h.row(0).setConstant(0.4);
    h.row(1).setConstant(1.2);
    CHECK(h.mean() == doctest::Approx(0.8));
    CHECK(relative_mass(snake_of({{0, 0}, {0, 2}, {0, 4}}), image_of(h)) == doctest::Approx(0.5));

    // dark snake (0.1) on a bright image of mean 0.9: 2 dark pixels, 16 white
    GridXd dd = GridXd::Ones(2, 9);
    dd(0, 0) = dd(0, 1) = 0.1;
    CHECK(dd.mean() == doctest::Approx(0.9));
    const Snake dark = snake_of({{0, 0}, {0, 1}});
    CHECK(relative_mass(dark, image_of(dd)) == doctest::Approx(0.1 / 0.9));
    FeatureVector v;
    v.relative_density = relative_mass(dark, image_of(dd));
    apply_cutoffs(v, FeatureConfig{});
    CHECK(v.low_density);

    CHECK_THROWS_AS(relative_mass(dark, image_of(GridXd::Zero(4, 4))), InputError);
}

TEST_CASE("binary cutoffs at the boundary") {
    FeatureConfig cfg;
    FeatureVector v;
    v.relative_density = 0.5;
    v.length = 4.0;
    v.avg_y = cfg.low_freq_cutoff_y + 1.0;
    apply_cutoffs(v, cfg);
    CHECK(v.low_density);
    CHECK(v.long_);
    CHECK_FALSE(v.low);
    v.relative_density = 0.8;
    v.length = 2.99;
    v.avg_y = cfg.low_freq_cutoff_y;
    apply_cutoffs(v, cfg);
    CHECK(v.low_density);
    CHECK_FALSE(v.long_);
    CHECK(v.low);
    v.length = 3.0;
    apply_cutoffs(v, cfg);
    CHECK(v.long_);
}

TEST_CASE("compute_l") {
    const auto s = [](double d) { return snake_of({{0, 0}, {d, 0}}); };
    CHECK(compute_l({s(40)}) == 40.0);
    CHECK(compute_l({s(40), s(25), s(90)}) == 25.0);
    CHECK_THROWS_AS(compute_l({}), InputError);
}

TEST_CASE("features of random snakes obey their invariants") {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridXd img(100, 80);
    for (Eigen::Index i = 0; i < img.size(); ++i) img(i) = u(gen);
    FeatureConfig cfg;
    cfg.length_norm_l = 12.5;
    for (int trial = 0; trial < 200; ++trial) {
        Snake s;
        s.points.resize(50, 2);
        for (int i = 0; i < 50; ++i) {
            s.points(i, 0) = u(gen) * 99;
            s.points(i, 1) = u(gen) * 79;
        }
        const auto v = build_feature_vector(s, image_of(img), cfg);
        CHECK(v.avg_density >= 0.0);
        CHECK(v.avg_density <= 1.0);
        CHECK(v.inertia >= 0.0);
        CHECK(v.length >= 0.0);
        CHECK(v.low_density == (v.relative_density <= cfg.low_density_cutoff));
        CHECK(v.long_ == (v.length >= cfg.long_cutoff));
        CHECK(v.low == (v.avg_y <= cfg.low_freq_cutoff_y));
    }
}

TEST_CASE("translating snake and image together in x changes avg_x only") {
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridXd img(120, 60);
    for (Eigen::Index i = 0; i < img.size(); ++i) img(i) = u(gen);
    const int shift = 17;
    GridXd moved(120, 60);
    for (int x = 0; x < 120; ++x) moved.row((x + shift) % 120) = img.row(x);
    Snake s;
    s.points.resize(50, 2);
    for (int i = 0; i < 50; ++i) {
        s.points(i, 0) = 10 + u(gen) * 80;
        s.points(i, 1) = u(gen) * 59;
    }
    Snake t = s;
    t.points.col(0).array() += shift;
    const auto a = build_feature_vector(s, image_of(img), FeatureConfig{});
    const auto b = build_feature_vector(t, image_of(moved), FeatureConfig{});
    CHECK(b.avg_x == doctest::Approx(a.avg_x + shift));
    CHECK(b.avg_y == doctest::Approx(a.avg_y).epsilon(1e-12));
    CHECK(b.avg_density == doctest::Approx(a.avg_density).epsilon(1e-12));
    CHECK(b.relative_density == doctest::Approx(a.relative_density).epsilon(1e-12));
    CHECK(b.inertia == doctest::Approx(a.inertia).epsilon(1e-12));
    CHECK(b.length == doctest::Approx(a.length).epsilon(1e-12));
}

TEST_CASE("correlation matrix") {
    Eigen::MatrixXd two(3, 2);
    two << 1, 2, 2, 4, 3, 6;
    const auto c2 = correlation_matrix(two);
    CHECK(c2(0, 1) == doctest::Approx(1.0));
    CHECK(c2(1, 0) == doctest::Approx(1.0));

    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 40; ++i) {
        FeatureVector v;
        v.avg_density = u(gen);
        v.avg_x = v.avg_density * 3 + 1;  // exact copy up to an affine map
        v.avg_y = u(gen) * 50;
        v.inertia = u(gen);
        v.length = u(gen) * 5;
        v.relative_density = u(gen) * 2;
        apply_cutoffs(v, FeatureConfig{});
        v.target = u(gen) < 0.5;
        rows.push_back(v);
    }
    const auto c = correlation_matrix(rows);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 10; ++i) CHECK(c(i, i) == 1.0);
    CHECK((c.array() <= 1.0).all());
    CHECK((c.array() >= -1.0).all());
    CHECK(c(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("CSV header and row format") {
    CHECK(csv_header() == "avg_density,avg_x,avg_y,inertia,length,relative_density,low_density,long,low,target");
    FeatureVector v;
    v.avg_density = 0.25;
    v.avg_x = 512.5;
    v.avg_y = 40.125;
    v.inertia = 1234.5;
    v.length = 1.0;
    v.relative_density = 0.3125;
    v.low_density = true;
    v.long_ = false;
    v.low = false;
    CHECK(csv_row(v) == "0.250000,512.500000,40.125000,1234.500000,1.000000,0.312500,1,0,0,");
    v.target = true;
    CHECK(csv_row(v) == "0.250000,512.500000,40.125000,1234.500000,1.000000,0.312500,1,0,0,1");

    std::stringstream ss;
    FeatureVector w = v;
    w.target.reset();
    write_dataset_csv(ss, {v, w});
    const auto back = read_dataset_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].target == std::optional<bool>(true));
    CHECK_FALSE(back[1].target.has_value());
    CHECK(back[0].avg_y == 40.125);
    CHECK(back[0].low_density);
}

TEST_CASE("quantize matches what the CSV stores") {
    FeatureVector v;
    v.relative_density = 0.80000049;
    v.avg_y = 9.9999996;
    quantize(v);
    CHECK(v.relative_density == 0.8);
    CHECK(v.avg_y == 10.0);
}

TEST_CASE("CSV errors") {
    std::stringstream bad_header("a,b,c\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_header), InputError);
    std::stringstream bad_cells(csv_header() + "\n1,2,3\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_cells), InputError);
    std::stringstream bad_flag(csv_header() + "\n1,2,3,4,5,6,2,0,0,\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_flag), InputError);
    std::stringstream empty;
    CHECK_THROWS_AS(read_dataset_csv(empty), InputError);
}
