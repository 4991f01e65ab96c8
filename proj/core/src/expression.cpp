#include "lbp/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "lbp/error.hpp"

namespace lbp {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, int dimension, Arguments args)
      : text_(text), dimension_(dimension), args_(args) {}

  Expression run() {
    Expression e;
    e.source_ = std::string(text_);
    out_ = &e;
    skip_space();
    if (at_end()) fail("empty expression");
    expr();
    skip_space();
    if (!at_end()) fail(std::string("unexpected '") + text_[pos_] + "'");
    compute_depth(e);
    return e;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    std::ostringstream os;
    os << "syntax error at position " << at << ": " << msg << " in \"" << text_ << "\"";
    throw ParseError(os.str(), at);
  }

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void emit(Op op, std::uint32_t index = 0, double value = 0.0) {
    out_->program_.push_back({op, index, value});
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit(Op::kAdd);
      } else if (accept('-')) {
        term();
        emit(Op::kSub);
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit(Op::kMul);
      } else if (accept('/')) {
        unary();
        emit(Op::kDiv);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      emit(Op::kNeg);
    } else if (accept('+')) {
      unary();
    } else {
      power();
    }
  }

  void power() {
    primary();
    if (accept('^')) {
      unary();
      emit(Op::kPow);
    }
  }

  void primary() {
    skip_space();
    if (at_end()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      const std::size_t open = pos_;
      ++pos_;
      expr();
      if (!accept(')')) fail_at("unclosed parenthesis", open);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      identifier();
      return;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  void number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) fail_at("malformed number", start);
    emit(Op::kConst, 0, value);
  }

  void identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if (name == "exp" || name == "log") {
      if (!accept('(')) fail("expected '(' after " + std::string(name));
      const std::size_t open = pos_ - 1;
      expr();
      if (!accept(')')) fail_at("unclosed parenthesis", open);
      emit(name == "exp" ? Op::kExp : Op::kLog);
      return;
    }

    if ((name[0] == 'x' || name[0] == 'y') && name.size() > 1) {
      const std::string_view digits = name.substr(1);
      unsigned index = 0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (ec == std::errc() && ptr == digits.data() + digits.size()) {
        if (name[0] == 'y' && args_ == Arguments::kX) {
          fail_at("unknown identifier '" + std::string(name) + "' (only x1..x" + std::to_string(dimension_) +
                      " are allowed here)",
                  start);
        }
        if (index < 1 || static_cast<int>(index) > dimension_) {
          fail_at("dimension mismatch: '" + std::string(name) + "' used with k=" + std::to_string(dimension_), start);
        }
        out_->is_constant_ = false;
        if (name[0] == 'y') out_->uses_y_ = true;
        emit(name[0] == 'x' ? Op::kX : Op::kY, index - 1);
        return;
      }
    }
    fail_at("unknown identifier '" + std::string(name) + "'", start);
  }

  static void compute_depth(Expression& e) {
    std::size_t depth = 0;
    for (const auto& in : e.program_) {
      switch (in.op) {
        case Op::kConst:
        case Op::kX:
        case Op::kY:
          ++depth;
          break;
        case Op::kNeg:
        case Op::kExp:
        case Op::kLog:
          break;
        default:
          --depth;
      }
      e.max_depth_ = std::max(e.max_depth_, depth);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int dimension_;
  Arguments args_;
  Expression* out_ = nullptr;
};

Expression Expression::parse(std::string_view text, int dimension, Arguments args) {
  if (dimension < 1) throw ParseError("trait dimension must be positive");
  return ExpressionParser(text, dimension, args).run();
}

Expression Expression::constant(double value) {
  Expression e;
  std::ostringstream os;
  os.precision(17);
  os << value;
  e.source_ = os.str();
  e.program_.push_back({Op::kConst, 0, value});
  e.max_depth_ = 1;
  return e;
}

namespace {

template <typename Stack>
double run_program(const auto& program, Stack& stack, std::span<const double> x, std::span<const double> y) {
  std::size_t top = 0;
  for (const auto& in : program) {
    using Op = std::remove_cvref_t<decltype(in.op)>;
    switch (in.op) {
      case Op::kConst:
        stack[top++] = in.value;
        break;
      case Op::kX:
        stack[top++] = x[in.index];
        break;
      case Op::kY:
        stack[top++] = y[in.index];
        break;
      case Op::kAdd:
        --top;
        stack[top - 1] += stack[top];
        break;
      case Op::kSub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case Op::kMul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      case Op::kDiv:
        --top;
        stack[top - 1] /= stack[top];
        break;
      case Op::kPow:
        --top;
        stack[top - 1] = std::pow(stack[top - 1], stack[top]);
        break;
      case Op::kNeg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Op::kExp:
        stack[top - 1] = std::exp(stack[top - 1]);
        break;
      case Op::kLog:
        stack[top - 1] = std::log(stack[top - 1]);
        break;
    }
  }
  return stack[0];
}

}  // namespace

double Expression::operator()(std::span<const double> x, std::span<const double> y) const {
  if (program_.empty()) throw ModelError("evaluating an empty expression");
  if (uses_y_ && y.empty()) throw ModelError("expression '" + source_ + "' needs a second trait argument");
  constexpr std::size_t kInline = 32;
  if (max_depth_ <= kInline) {
    std::array<double, kInline> stack;
    return run_program(program_, stack, x, y);
  }
  std::vector<double> stack(max_depth_);
  return run_program(program_, stack, x, y);
}

}  // namespace lbp
