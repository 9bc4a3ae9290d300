#include "greensurrogate/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "greensurrogate/error.hpp"

namespace gsurr {

class ExpressionParser {
 public:
  using Op = Expression::Node::Op;

  ExpressionParser(const std::string& text, Expression& out) : text_(text), out_(out) {}

  int parse() {
    const int root = expr();
    skip_space();
    if (pos_ != text_.size()) error("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::config, "expression '" + text_ + "' column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Op op, int lhs = -1, int rhs = -1, double value = 0.0) {
    out_.nodes_.push_back({op, value, lhs, rhs});
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = add(Op::add, lhs, term());
      } else if (accept('-')) {
        lhs = add(Op::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = add(Op::mul, lhs, unary());
      } else if (accept('/')) {
        lhs = add(Op::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept('-')) return add(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  int power() {
    const int base = atom();
    if (accept('^')) return add(Op::pow, base, unary());
    return base;
  }

  int atom() {
    skip_space();
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      const int inner = expr();
      if (!accept(')')) error("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) error("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return add(Op::constant, -1, -1, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < text_.size() && std::isalnum(static_cast<unsigned char>(text_[end]))) ++end;
      const std::string name = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (name == "x1") return add(Op::x1);
      if (name == "x2") return add(Op::x2);
      if (name == "pi") return add(Op::constant, -1, -1, std::numbers::pi);
      if (name == "e") return add(Op::constant, -1, -1, std::numbers::e);
      Op fn;
      if (name == "sin") {
        fn = Op::sin;
      } else if (name == "cos") {
        fn = Op::cos;
      } else if (name == "exp") {
        fn = Op::exp;
      } else {
        pos_ -= name.size();
        error("unknown identifier '" + name + "'");
      }
      if (!accept('(')) error("expected '(' after " + name);
      const int arg = expr();
      if (!accept(')')) error("expected ')'");
      return add(fn, arg);
    }
    error(std::string("unexpected character '") + c + "'");
  }

  const std::string& text_;
  Expression& out_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.source_ = text;
  ExpressionParser parser(text, e);
  e.root_ = parser.parse();
  return e;
}

double Expression::operator()(double x1, double x2) const { return eval(root_, x1, x2); }

double Expression::eval(int node, double x1, double x2) const {
  const Node& nd = nodes_[static_cast<std::size_t>(node)];
  switch (nd.op) {
    case Node::Op::constant: return nd.value;
    case Node::Op::x1: return x1;
    case Node::Op::x2: return x2;
    case Node::Op::add: return eval(nd.lhs, x1, x2) + eval(nd.rhs, x1, x2);
    case Node::Op::sub: return eval(nd.lhs, x1, x2) - eval(nd.rhs, x1, x2);
    case Node::Op::mul: return eval(nd.lhs, x1, x2) * eval(nd.rhs, x1, x2);
    case Node::Op::div: return eval(nd.lhs, x1, x2) / eval(nd.rhs, x1, x2);
    case Node::Op::pow: return std::pow(eval(nd.lhs, x1, x2), eval(nd.rhs, x1, x2));
    case Node::Op::neg: return -eval(nd.lhs, x1, x2);
    case Node::Op::sin: return std::sin(eval(nd.lhs, x1, x2));
    case Node::Op::cos: return std::cos(eval(nd.lhs, x1, x2));
    case Node::Op::exp: return std::exp(eval(nd.lhs, x1, x2));
  }
  return 0.0;
}

}  // namespace gsurr
