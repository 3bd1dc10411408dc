#include "mcflab/polynomial.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "mcflab/error.hpp"
#include "mcflab/mesh_io.hpp"

namespace mcflab {

Polynomial Polynomial::constant(int num_vars, double c) {
  Polynomial p(num_vars);
  p.add_term(Monomial(num_vars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int index) {
  Polynomial p(num_vars);
  Monomial m(num_vars, 0);
  m.at(index) = 1;
  p.add_term(m, 1.0);
  return p;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) {
    int s = 0;
    for (int e : m) s += e;
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double sum = 0;
  for (const auto& [m, c] : terms_) {
    double v = c;
    for (int i = 0; i < num_vars_; ++i) {
      for (int e = 0; e < m[i]; ++e) v *= x[i];
    }
    sum += v;
  }
  return sum;
}

namespace {

double ipow(double x, int e) {
  double r = 1;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

Eigen::VectorXd Polynomial::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(num_vars_);
  for (const auto& [m, c] : terms_) {
    for (int k = 0; k < num_vars_; ++k) {
      if (m[k] == 0) continue;
      double v = c * m[k];
      for (int i = 0; i < num_vars_; ++i) v *= ipow(x[i], i == k ? m[i] - 1 : m[i]);
      g[k] += v;
    }
  }
  return g;
}

Eigen::MatrixXd Polynomial::hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(num_vars_, num_vars_);
  for (const auto& [m, c] : terms_) {
    for (int a = 0; a < num_vars_; ++a) {
      for (int b = a; b < num_vars_; ++b) {
        Monomial d = m;
        double v = c;
        v *= d[a];
        if (d[a] == 0) continue;
        --d[a];
        v *= d[b];
        if (d[b] == 0) continue;
        --d[b];
        for (int i = 0; i < num_vars_; ++i) v *= ipow(x[i], d[i]);
        h(a, b) += v;
        if (a != b) h(b, a) += v;
      }
    }
  }
  return h;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(num_vars_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m(num_vars_);
      for (int i = 0; i < num_vars_; ++i) m[i] = ma[i] + mb[i];
      r.add_term(m, ca * cb);
    }
  }
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(num_vars_);
  for (const auto& [m, c] : terms_) r.add_term(m, c * s);
  return r;
}

Polynomial Polynomial::pow(int exponent) const {
  if (exponent < 0) fail(ErrorCode::ParseError, "negative exponent");
  Polynomial r = constant(num_vars_, 1.0);
  for (int i = 0; i < exponent; ++i) r = r * *this;
  return r;
}

Polynomial Polynomial::substitute_affine(double a, const Eigen::VectorXd& b) const {
  std::vector<Polynomial> lin;
  for (int i = 0; i < num_vars_; ++i) {
    lin.push_back(variable(num_vars_, i) * a + constant(num_vars_, b[i]));
  }
  Polynomial r(num_vars_);
  for (const auto& [m, c] : terms_) {
    Polynomial t = constant(num_vars_, c);
    for (int i = 0; i < num_vars_; ++i) {
      if (m[i] > 0) t = t * lin[i].pow(m[i]);
    }
    r = r + t;
  }
  return r;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) out += " + ";
    first = false;
    std::string term = "(" + format_double(c) + ")";
    for (int i = 0; i < num_vars_; ++i) {
      if (m[i] == 0) continue;
      term += "*x" + std::to_string(i + 1);
      if (m[i] > 1) term += "^" + std::to_string(m[i]);
    }
    out += term;
  }
  return out;
}

namespace {

class Parser {
public:
  Parser(std::string_view text, int num_vars) : text_(text), n_(num_vars) {}

  Polynomial run() {
    Polynomial p = expr();
    skip();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::ParseError, "polynomial at column " + std::to_string(pos_ + 1) + ": " + msg);
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

  Polynomial expr() {
    Polynomial p = term();
    for (;;) {
      if (accept('+')) {
        p = p + term();
      } else if (accept('-')) {
        p = p - term();
      } else {
        return p;
      }
    }
  }

  Polynomial term() {
    Polynomial p = unary();
    while (accept('*')) p = p * unary();
    return p;
  }

  Polynomial unary() {
    if (accept('-')) return unary() * -1.0;
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = atom();
    if (accept('^')) {
      skip();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) error("expected a non-negative integer exponent");
      int e = 0;
      std::from_chars(text_.data() + start, text_.data() + pos_, e);
      return base.pow(e);
    }
    return base;
  }

  Polynomial atom() {
    skip();
    if (pos_ >= text_.size()) error("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!accept(')')) error("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0;
      const auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (res.ec != std::errc()) error("bad number");
      pos_ = static_cast<std::size_t>(res.ptr - text_.data());
      return Polynomial::constant(n_, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      int index = -1;
      if (name == "x" && n_ >= 1) index = 0;
      else if (name == "y") index = 1;
      else if (name == "z") index = 2;
      else if (name == "w") index = 3;
      else if (name.size() > 1 && name[0] == 'x') {
        int k = 0;
        const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
        if (res.ec == std::errc() && res.ptr == name.data() + name.size()) index = k - 1;
      }
      if (index < 0 || index >= n_) {
        pos_ = start;
        error("unknown variable '" + std::string(name) + "'");
      }
      return Polynomial::variable(n_, index);
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  int n_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial Polynomial::parse(std::string_view text, int num_vars) {
  if (num_vars < 1) fail(ErrorCode::InvalidArgument, "polynomial needs at least one variable");
  return Parser(text, num_vars).run();
}

}  // namespace mcflab
