#pragma once

#include <memory>
#include <string>
#include <vector>

namespace gsurr {

/// Scalar expression in the coordinates x1, x2.
///
/// Grammar (usual precedence, `^` right-associative, unary minus binds
/// looser than `^` so -x1^2 == -(x1^2)):
///
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := ('-' | '+') unary | power
///   power  := atom ('^' unary)?
///   atom   := number | 'x1' | 'x2' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
///   func   := 'sin' | 'cos' | 'exp'
class Expression {
 public:
  /// Throws Error(config) with the offending column on a parse failure.
  static Expression parse(const std::string& text);

  double operator()(double x1, double x2) const;
  const std::string& source() const noexcept { return source_; }

 private:
  struct Node {
    enum class Op { constant, x1, x2, add, sub, mul, div, pow, neg, sin, cos, exp } op;
    double value = 0.0;
    int lhs = -1;
    int rhs = -1;
  };
  friend class ExpressionParser;

  double eval(int node, double x1, double x2) const;

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace gsurr
