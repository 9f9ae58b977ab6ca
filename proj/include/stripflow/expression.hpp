#pragma once
/**
 * @brief Small recursive-descent parser for initial-profile expressions in the
 *        variable x, with complex arithmetic and the imaginary unit i.
 *
 * Grammar: expr = term {(+|-) term}; term = unary {(*|/) unary};
 * unary = (+|-) unary | power; power = atom [^ unary];
 * atom = number | x | pi | i | name ( expr ) | ( expr ).
 */
#include "core.hpp"

#include <cctype>
#include <charconv>
#include <memory>

namespace stripflow {

class Expression {
 public:
  explicit Expression(std::string text) : text_(std::move(text)) {
    pos_ = 0;
    root_ = parse_expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
  }

  Complex operator()(double x) const { return root_->eval(x); }
  const std::string& text() const { return text_; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual Complex eval(double x) const = 0;
  };
  using Ptr = std::shared_ptr<const Node>;

  struct Const : Node {
    Complex v;
    explicit Const(Complex c) : v(c) {}
    Complex eval(double) const override { return v; }
  };
  struct Var : Node {
    Complex eval(double x) const override { return {x, 0.0}; }
  };
  struct Unary : Node {
    Complex (*fn)(Complex);
    Ptr arg;
    Unary(Complex (*f)(Complex), Ptr a) : fn(f), arg(std::move(a)) {}
    Complex eval(double x) const override { return fn(arg->eval(x)); }
  };
  struct Binary : Node {
    char op;
    Ptr l, r;
    Binary(char o, Ptr a, Ptr b) : op(o), l(std::move(a)), r(std::move(b)) {}
    Complex eval(double x) const override {
      Complex a = l->eval(x), b = r->eval(x);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: {
          // integer powers of real bases stay real
          if (b.imag() == 0.0 && a.imag() == 0.0 && (a.real() >= 0.0 || b.real() == std::round(b.real())))
            return {std::pow(a.real(), b.real()), 0.0};
          return std::pow(a, b);
        }
      }
    }
  };

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::Schema, "expression '" + text_ + "' at column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Ptr parse_expr() {
    Ptr lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = std::make_shared<Binary>('+', lhs, parse_term());
      else if (accept('-')) lhs = std::make_shared<Binary>('-', lhs, parse_term());
      else return lhs;
    }
  }

  Ptr parse_term() {
    Ptr lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = std::make_shared<Binary>('*', lhs, parse_unary());
      else if (accept('/')) lhs = std::make_shared<Binary>('/', lhs, parse_unary());
      else return lhs;
    }
  }

  Ptr parse_unary() {
    if (accept('-')) return std::make_shared<Binary>('-', std::make_shared<Const>(0.0), parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Ptr parse_power() {
    Ptr base = parse_atom();
    if (accept('^')) return std::make_shared<Binary>('^', base, parse_unary());
    return base;
  }

  static Complex (*function_named(const std::string& n))(Complex) {
    if (n == "sin") return [](Complex z) { return std::sin(z); };
    if (n == "cos") return [](Complex z) { return std::cos(z); };
    if (n == "tan") return [](Complex z) { return std::tan(z); };
    if (n == "exp") return [](Complex z) { return std::exp(z); };
    if (n == "log") return [](Complex z) { return std::log(z); };
    if (n == "sqrt") return [](Complex z) { return std::sqrt(z); };
    if (n == "sinh") return [](Complex z) { return std::sinh(z); };
    if (n == "cosh") return [](Complex z) { return std::cosh(z); };
    if (n == "tanh") return [](Complex z) { return std::tanh(z); };
    if (n == "abs") return [](Complex z) { return Complex(std::abs(z), 0.0); };
    return nullptr;
  }

  Ptr parse_atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Ptr e = parse_expr();
      if (!accept(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (ec != std::errc()) fail("malformed number");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      return std::make_shared<Const>(Complex(v, 0.0));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      std::string name = text_.substr(start, pos_ - start);
      if (name == "x") return std::make_shared<Var>();
      if (name == "pi") return std::make_shared<Const>(Complex(pi, 0.0));
      if (name == "i") return std::make_shared<Const>(I_unit);
      auto fn = function_named(name);
      if (!fn) {
        pos_ = start;
        fail("unknown name '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      Ptr arg = parse_expr();
      if (!accept(')')) fail("missing ')'");
      return std::make_shared<Unary>(fn, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string text_;
  std::size_t pos_ = 0;
  Ptr root_;
};

}  // namespace stripflow
