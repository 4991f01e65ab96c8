#include "lbp/selection.hpp"

#include <cmath>
#include <sstream>

#include "lbp/error.hpp"

namespace lbp {

void TwoTypeRates::validate() const {
  for (double v : {b_x, b_y, c_xx, c_xy, c_yx, c_yy}) {
    if (!std::isfinite(v) || v <= 0.0) throw ModelError("invalid two-type rates " + to_string() + ": all must be finite and > 0");
  }
}

bool TwoTypeRates::is_neutral() const { return b_y == b_x && c_xy == c_xx && c_yx == c_xx && c_yy == c_xx; }

std::string TwoTypeRates::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "(b_x=" << b_x << ", b_y=" << b_y << ", c_xx=" << c_xx << ", c_xy=" << c_xy << ", c_yx=" << c_yx
     << ", c_yy=" << c_yy << ")";
  return os.str();
}

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::kLambda:
      return "lambda";
    case Direction::kDelta:
      return "delta";
    case Direction::kAlpha:
      return "alpha";
    case Direction::kEpsilon:
      return "epsilon";
  }
  return "?";
}

// C = c 1 1' - [0 0; d d] + [0 a; 0 a] - [0 e; e 0]:
//   c_xy = c + a - e,  c_yx = c - d - e,  c_yy = c - d + a.
SelectionCoefficients selection_coefficients(const TwoTypeRates& r) {
  SelectionCoefficients s;
  s.base_b = r.b_x;
  s.base_c = r.c_xx;
  s.lambda = r.b_y - r.b_x;
  s.alpha = 0.5 * ((r.c_xy - r.c_xx) + (r.c_yy - r.c_yx));
  s.epsilon = 0.5 * ((r.c_xx - r.c_xy) + (r.c_yy - r.c_yx));
  s.delta = 0.5 * ((r.c_xx - r.c_yy) + (r.c_xy - r.c_yx));
  return s;
}

TwoTypeRates reconstruct_rates(const SelectionCoefficients& s) {
  TwoTypeRates r;
  r.b_x = s.base_b;
  r.b_y = s.base_b + s.lambda;
  r.c_xx = s.base_c;
  r.c_xy = s.base_c + s.alpha - s.epsilon;
  r.c_yx = s.base_c - s.delta - s.epsilon;
  r.c_yy = s.base_c - s.delta + s.alpha;
  r.validate();
  return r;
}

SelectionCoefficients perturbed(double b, double c, Direction d, double step) {
  SelectionCoefficients s{b, c, 0.0, 0.0, 0.0, 0.0};
  switch (d) {
    case Direction::kLambda:
      s.lambda = step;
      break;
    case Direction::kDelta:
      s.delta = step;
      break;
    case Direction::kAlpha:
      s.alpha = step;
      break;
    case Direction::kEpsilon:
      s.epsilon = step;
      break;
  }
  return s;
}

}  // namespace lbp
