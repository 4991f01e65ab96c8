#include <doctest.h>

#include <random>

#include <lbp/error.hpp>
#include <lbp/selection.hpp>

using namespace lbp;

TEST_CASE("neutral rates have zero selection") {
  const auto s = selection_coefficients({1, 1, 1, 1, 1, 1});
  CHECK(s == SelectionCoefficients{1, 1, 0, 0, 0, 0});
  CHECK(TwoTypeRates::neutral(2, 3).is_neutral());
  CHECK_FALSE(TwoTypeRates({1, 1.1, 1, 1, 1, 1}).is_neutral());
}

TEST_CASE("fertility advantage") {
  const auto s = selection_coefficients({1, 1.1, 1, 1, 1, 1});
  CHECK(s.lambda == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(s.delta == 0.0);
  CHECK(s.alpha == 0.0);
  CHECK(s.epsilon == 0.0);
}

TEST_CASE("defence lowers the mutant row") {
  const TwoTypeRates r = reconstruct_rates({1, 1, 0, 0.1, 0, 0});
  CHECK(r.c_xx == 1.0);
  CHECK(r.c_xy == 1.0);
  CHECK(r.c_yx == doctest::Approx(0.9));
  CHECK(r.c_yy == doctest::Approx(0.9));
}

TEST_CASE("each direction against the decomposition") {
  // c_xy = c + alpha - eps, c_yx = c - delta - eps, c_yy = c - delta + alpha.
  const TwoTypeRates alpha = reconstruct_rates({1, 2, 0, 0, 0.25, 0});
  CHECK(alpha == TwoTypeRates{1, 1, 2, 2.25, 2, 2.25});
  const TwoTypeRates eps = reconstruct_rates({1, 2, 0, 0, 0, 0.25});
  CHECK(eps == TwoTypeRates{1, 1, 2, 1.75, 1.75, 2});
  for (Direction d : {Direction::kLambda, Direction::kDelta, Direction::kAlpha, Direction::kEpsilon}) {
    const auto s = selection_coefficients(reconstruct_rates(perturbed(1.5, 2.0, d, 0.125)));
    CHECK(s.lambda == (d == Direction::kLambda ? 0.125 : 0.0));
    CHECK(s.delta == (d == Direction::kDelta ? 0.125 : 0.0));
    CHECK(s.alpha == (d == Direction::kAlpha ? 0.125 : 0.0));
    CHECK(s.epsilon == (d == Direction::kEpsilon ? 0.125 : 0.0));
  }
}

TEST_CASE("positivity violation") {
  CHECK_THROWS_AS(reconstruct_rates({1, 0.05, 0, 0.2, 0, 0}), ModelError);
  CHECK_THROWS_AS(TwoTypeRates({1, 1, 1, 0, 1, 1}).validate(), ModelError);
  CHECK_THROWS_AS(TwoTypeRates({1, 1, 1, 1, 1, std::nan("")}).validate(), ModelError);
}

TEST_CASE("round trip on random rates") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 10'000; ++i) {
    const TwoTypeRates r{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const TwoTypeRates back = reconstruct_rates(selection_coefficients(r));
    const double scale = std::max({r.c_xx, r.c_xy, r.c_yx, r.c_yy});
    CHECK(std::abs(back.b_x - r.b_x) <= 1e-14 * r.b_x);
    CHECK(std::abs(back.b_y - r.b_y) <= 1e-14 * std::max(r.b_x, r.b_y));
    CHECK(std::abs(back.c_xx - r.c_xx) <= 1e-14 * scale);
    CHECK(std::abs(back.c_xy - r.c_xy) <= 1e-14 * scale);
    CHECK(std::abs(back.c_yx - r.c_yx) <= 1e-14 * scale);
    CHECK(std::abs(back.c_yy - r.c_yy) <= 1e-14 * scale);
  }
}
