#include <doctest.h>

#include <cmath>

#include <lbp/error.hpp>
#include <lbp/model.hpp>
#include <lbp/random.hpp>
#include <lbp/selection.hpp>

using namespace lbp;

TEST_CASE("eval_rates") {
  const ModelSpec constant = parse_model("k=1; b=2; c=1");
  CHECK(eval_rates(constant, TraitPoint{0.4}, TraitPoint{-3.0}) == TwoTypeRates{2, 2, 1, 1, 1, 1});

  const ModelSpec m = parse_model("k=1; b=1+x1; c=exp(-(x1-y1)^2) + 0.1*y1^2");
  const TwoTypeRates same = eval_rates(m, TraitPoint{0.3}, TraitPoint{0.3});
  CHECK(same.b_x == same.b_y);
  CHECK(same.c_xx == same.c_xy);
  CHECK(same.c_xx == same.c_yx);
  CHECK(same.c_xx == same.c_yy);

  const TwoTypeRates r = eval_rates(m, TraitPoint{0.0}, TraitPoint{0.1});
  CHECK(r.b_x == 1.0);
  CHECK(r.b_y == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(r.c_xy == doctest::Approx(std::exp(-0.01) + 0.001).epsilon(1e-15));
  CHECK(r.c_yx == doctest::Approx(std::exp(-0.01)).epsilon(1e-15));
}

TEST_CASE("gradients") {
  const ModelSpec constant = parse_model("k=2; b=2; c=1");
  const TraitPoint x{0.5, -0.5};
  CHECK(grad_b(constant, x).isZero(0.0));
  CHECK(grad_c1(constant, x).isZero(0.0));
  CHECK(grad_c2(constant, x).isZero(0.0));

  const ModelSpec linear = parse_model("k=1; b=1+x1; c=1");
  CHECK(std::abs(grad_b(linear, TraitPoint{0.0})[0] - 1.0) <= 1e-8);

  const ModelSpec gauss = parse_model("k=1; b=1; c=exp(-(x1-y1)^2)");
  CHECK(std::abs(grad_c1(gauss, TraitPoint{0.0})[0]) <= 1e-12);
  CHECK(std::abs(grad_c2(gauss, TraitPoint{0.0})[0]) <= 1e-12);

  // Quadratics: central differences are exact up to rounding.
  const ModelSpec quad = parse_model("k=2; b=3 + x1^2 - 2*x1*x2 + 0.5*x2^2; c=2 + x1*y2 + x1^2 + 3*y1^2");
  for (const TraitPoint& p : {TraitPoint{0.3, -1.2}, TraitPoint{4.0, 2.5}, TraitPoint{-20.0, 0.01}}) {
    const double x1 = p[0], x2 = p[1];
    const Eigen::Vector2d gb(2 * x1 - 2 * x2, -2 * x1 + x2);
    const Eigen::Vector2d g1(x2 + 2 * x1, 0.0);  // d/dx of c(x, y) at y = x
    const Eigen::Vector2d g2(6 * x1, x1);        // d/dy of c(x, y) at y = x
    CHECK((grad_b(quad, p) - gb).norm() <= 1e-8 * gb.norm());
    CHECK((grad_c1(quad, p) - g1).norm() <= 1e-8 * g1.norm());
    CHECK((grad_c2(quad, p) - g2).norm() <= 1e-8 * g2.norm());
  }
}

TEST_CASE("selection-coefficient chain rule at y = x") {
  const ModelSpec m = parse_model("k=2; b=1 + 0.3*x1 - 0.2*x2^2; c=exp(-0.5*(x1-y1+0.2)^2)*(1 + 0.1*x2) + 0.3*y2^2");
  const TraitPoint x{0.4, -0.7};
  const Eigen::VectorXd gb = grad_b(m, x), g1 = grad_c1(m, x), g2 = grad_c2(m, x);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
    e[i] = h;
    const auto up = selection_coefficients(eval_rates(m, x, x + e));
    const auto down = selection_coefficients(eval_rates(m, x, x + Eigen::VectorXd(-e)));
    const double d_lambda = (up.lambda - down.lambda) / (2 * h);
    const double d_delta = (up.delta - down.delta) / (2 * h);
    const double d_alpha = (up.alpha - down.alpha) / (2 * h);
    const double d_eps = (up.epsilon - down.epsilon) / (2 * h);
    CHECK(d_lambda == doctest::Approx(gb[i]).epsilon(1e-6));
    CHECK(d_delta == doctest::Approx(-g1[i]).epsilon(1e-6));
    CHECK(d_alpha == doctest::Approx(g2[i]).epsilon(1e-6));
    CHECK(std::abs(d_eps) <= 1e-6 * (std::abs(g1[i]) + std::abs(g2[i])));
  }
}

TEST_CASE("mutation kernel sampling moments") {
  const ModelSpec m = parse_model("k=2; b=1; c=1; [mutation] kind=full-gaussian; sigma=[0.3, 0; 0.2, 0.1]");
  const TraitPoint x{0.0, 0.0};
  const Eigen::MatrixXd s = m.kernel().sigma(x);
  const Eigen::MatrixXd cov = s * s.transpose();
  Rng rng = make_rng(42);
  const int n = 200'000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d h = m.kernel().sample(x, rng);
    mean += h;
    second += h * h.transpose();
  }
  mean /= n;
  second /= n;
  // Standard errors are about sd / sqrt(n) ~ 7e-4.
  CHECK(std::abs(mean[0]) < 4e-3);
  CHECK(std::abs(mean[1]) < 4e-3);
  CHECK((second - cov).cwiseAbs().maxCoeff() < 2e-3);
}

TEST_CASE("trait points") {
  CHECK_THROWS_AS(TraitPoint({1.0, std::nan("")}), ModelError);
  const TraitPoint p{1.0, 2.0};
  CHECK((p + Eigen::Vector2d(0.5, -1.0)) == TraitPoint{1.5, 1.0});
  CHECK(TraitPoint{0.0} < TraitPoint{1.0});
}

TEST_CASE("competition scaling") {
  const ModelSpec m = parse_model("k=1; b=2; c=1+x1^2; c_min=0.5");
  const ModelSpec k = m.with_competition_scaled(10.0);
  CHECK(k.c(TraitPoint{1.0}, TraitPoint{0.0}) == doctest::Approx(0.2));
  CHECK(k.c_min() == doctest::Approx(0.05));
  CHECK(k.theta(TraitPoint{0.0}) == doctest::Approx(20.0));
}
