#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lbp {

// Which argument vectors an expression may reference.
enum class Arguments { kX, kXY };

// A compiled arithmetic expression over the variables x1..xk (and y1..yk).
//
// Grammar:
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := '-' unary | '+' unary | power
//   power   := primary [ '^' unary ]            (right associative)
//   primary := number | variable | func '(' expr ')' | '(' expr ')'
//   func    := 'exp' | 'log'
//   variable:= 'x' digits | 'y' digits           (1-based)
//
// Parsing throws ParseError with the offending offset. Evaluation is a small
// stack machine over a postfix program and allocates nothing for typical
// expression depths.
class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view text, int dimension, Arguments args);
  static Expression constant(double value);

  double operator()(std::span<const double> x, std::span<const double> y = {}) const;

  const std::string& source() const noexcept { return source_; }
  bool uses_y() const noexcept { return uses_y_; }
  // True when the program references no variable at all.
  bool is_constant() const noexcept { return is_constant_; }

 private:
  enum class Op : std::uint8_t { kConst, kX, kY, kAdd, kSub, kMul, kDiv, kPow, kNeg, kExp, kLog };
  struct Instr {
    Op op;
    std::uint32_t index = 0;
    double value = 0.0;
  };

  friend class ExpressionParser;

  std::string source_;
  std::vector<Instr> program_;
  std::size_t max_depth_ = 0;
  bool uses_y_ = false;
  bool is_constant_ = true;
};

}  // namespace lbp
