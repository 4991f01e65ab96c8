#pragma once

#include <string>

namespace lbp {

// Birth vector and competition matrix of a resident x / mutant y pair.
// c_xy is the death rate of an x-individual per y-individual present.
struct TwoTypeRates {
  double b_x = 1.0;
  double b_y = 1.0;
  double c_xx = 1.0;
  double c_xy = 1.0;
  double c_yx = 1.0;
  double c_yy = 1.0;

  static TwoTypeRates neutral(double b, double c) { return {b, b, c, c, c, c}; }

  // Throws ModelError unless all six rates are finite and strictly positive.
  void validate() const;
  bool is_neutral() const;
  std::string to_string() const;

  bool operator==(const TwoTypeRates&) const = default;
};

// Deviation of a two-type rate set from selective neutrality, signed so that
// positive values favour the mutant:
//   lambda  fertility       b_y = b + lambda
//   delta   defence         mutant row of C lowered by delta
//   alpha   aggressiveness  mutant column of C raised by alpha
//   epsilon isolation       cross terms lowered by epsilon
struct SelectionCoefficients {
  double base_b = 1.0;
  double base_c = 1.0;
  double lambda = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;

  bool operator==(const SelectionCoefficients&) const = default;
};

enum class Direction { kLambda, kDelta, kAlpha, kEpsilon };

const char* direction_name(Direction d);

SelectionCoefficients selection_coefficients(const TwoTypeRates& r);

// Inverse of selection_coefficients. Throws ModelError when a reconstructed
// rate is not strictly positive.
TwoTypeRates reconstruct_rates(const SelectionCoefficients& s);

// Neutral (b, c) shifted by `step` along one direction.
SelectionCoefficients perturbed(double b, double c, Direction d, double step);

}  // namespace lbp
