#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mcflab {

/// Multivariate polynomial in x1..xn with exact derivatives.
///
/// Grammar accepted by `parse`:
///   expr   := term (('+' | '-') term)*
///   term   := unary ('*' unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' integer)?
///   atom   := number | variable | '(' expr ')'
/// Variables are x1..xn; x, y, z, w alias x1..x4.
class Polynomial {
public:
  using Monomial = std::vector<int>;  // exponent per variable

  Polynomial() = default;
  explicit Polynomial(int num_vars) : num_vars_(num_vars) {}

  static Polynomial constant(int num_vars, double c);
  static Polynomial variable(int num_vars, int index);
  static Polynomial parse(std::string_view text, int num_vars);

  int num_vars() const { return num_vars_; }
  int degree() const;
  const std::map<Monomial, double>& terms() const { return terms_; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  Polynomial pow(int exponent) const;

  /// p(x) -> p(a * x + b), componentwise affine substitution with common scale a.
  Polynomial substitute_affine(double a, const Eigen::VectorXd& b) const;

  /// Round-trippable text in the accepted grammar.
  std::string to_string() const;

private:
  void add_term(const Monomial& m, double c);

  int num_vars_ = 0;
  std::map<Monomial, double> terms_;
};

}  // namespace mcflab
