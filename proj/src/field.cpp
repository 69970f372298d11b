#include "lodaykit/field.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {

ScalarField make(Op op, double value, int index, std::vector<ScalarField> kids) {
  return ScalarField(std::make_shared<ExprNode>(op, value, index, std::move(kids)));
}

const char* funcName(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Sgn: return "sgn";
    default: return "";
  }
}

std::string describe(const ExprNode& n);

/// Partial derivative of a child field, computed from one extra jet order.
class PartialNode : public FieldNode {
 public:
  PartialNode(ScalarField f, int m) : f_(std::move(f)), m_(m) {}
  Jet jet(std::span<const double> q, int order) const override {
    if (m_ >= static_cast<int>(q.size())) throw DomainError("partial derivative index outside chart dimension");
    return f_.jet(q, order + 1).derivative(m_);
  }

 private:
  ScalarField f_;
  int m_;
};

/// f(s_1(x), ..., s_m(x)) for arbitrary child fields, by jet composition.
class ComposeNode : public FieldNode {
 public:
  ComposeNode(ScalarField f, std::vector<ScalarField> subs) : f_(std::move(f)), subs_(std::move(subs)) {}
  Jet jet(std::span<const double> q, int order) const override {
    const int n = static_cast<int>(q.size());
    const int m = static_cast<int>(subs_.size());
    const JetLayout& out = JetLayout::get(n, order);
    std::vector<Jet> h;
    Point inner(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      Jet s = subs_[static_cast<std::size_t>(i)].jet(q, order);
      inner[static_cast<std::size_t>(i)] = s.value();
      s[0] = 0.0;
      h.push_back(std::move(s));
    }
    const Jet fj = f_.jet(inner, order);
    const JetLayout& fl = fj.layout();
    // powers[i][k] = h_i^k
    std::vector<std::vector<Jet>> powers(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      auto& P = powers[static_cast<std::size_t>(i)];
      P.push_back(Jet::constant(out, 1.0));
      for (int k = 1; k <= order; ++k) P.push_back(P.back() * h[static_cast<std::size_t>(i)]);
    }
    Jet r(out);
    for (int e = 0; e < fl.size; ++e) {
      const double c = fj[e];
      if (c == 0.0) continue;
      Jet term = Jet::constant(out, c);
      const auto& ex = fl.exps[static_cast<std::size_t>(e)];
      for (int i = 0; i < m; ++i)
        if (ex[static_cast<std::size_t>(i)] > 0)
          term = term * powers[static_cast<std::size_t>(i)][static_cast<std::size_t>(ex[static_cast<std::size_t>(i)])];
      r += term;
    }
    return r;
  }

 private:
  ScalarField f_;
  std::vector<ScalarField> subs_;
};

[[noreturn]] void singular(const ExprNode& n, std::span<const double> q) {
  throw SingularEvaluation(describe(n), Point(q.begin(), q.end()));
}

}  // namespace

ExprNode::ExprNode(Op o, double v, int i, std::vector<ScalarField> k) : op(o), value(v), index(i), kids(std::move(k)), pure(true) {
  for (const auto& c : kids)
    if (!c.isExpression()) pure = false;
}

Jet ExprNode::jet(std::span<const double> q, int order) const {
  const int n = static_cast<int>(q.size());
  const JetLayout& L = JetLayout::get(n, order);
  switch (op) {
    case Op::Const: return Jet::constant(L, value);
    case Op::Coord:
      if (index >= n) throw DomainError("coordinate index " + std::to_string(index) + " outside chart dimension");
      return Jet::variable(L, index, q[static_cast<std::size_t>(index)]);
    case Op::Neg: return -kids[0].jet(q, order);
    case Op::Add: return kids[0].jet(q, order) + kids[1].jet(q, order);
    case Op::Sub: return kids[0].jet(q, order) - kids[1].jet(q, order);
    case Op::Mul: {
      const Jet a = kids[0].jet(q, order);
      if (a.isZero()) return a;
      return a * kids[1].jet(q, order);
    }
    case Op::Div: {
      const Jet b = kids[1].jet(q, order);
      if (std::abs(b.value()) < kEpsGuard) singular(*this, q);
      return kids[0].jet(q, order) * reciprocal(b);
    }
    case Op::Pow: {
      const Jet a = kids[0].jet(q, order);
      if (index < 0 && std::abs(a.value()) < kEpsGuard) singular(*this, q);
      return powi(a, index);
    }
    case Op::Sin: return lk::sin(kids[0].jet(q, order));
    case Op::Cos: return lk::cos(kids[0].jet(q, order));
    case Op::Exp: return lk::exp(kids[0].jet(q, order));
    case Op::Sqrt: {
      const Jet a = kids[0].jet(q, order);
      if (a.value() < kEpsGuard) singular(*this, q);
      return lk::sqrt(a);
    }
    case Op::Abs: {
      const Jet a = kids[0].jet(q, order);
      if (std::abs(a.value()) < kEpsGuard) singular(*this, q);
      return a.value() < 0 ? -a : a;
    }
    case Op::Sgn: {
      const Jet a = kids[0].jet(q, order);
      if (std::abs(a.value()) < kEpsGuard) singular(*this, q);
      return Jet::constant(L, a.value() < 0 ? -1.0 : 1.0);
    }
  }
  throw std::logic_error("unknown expression node");
}

ScalarField::ScalarField() : node_(std::make_shared<ExprNode>(Op::Const, 0.0, 0, std::vector<ScalarField>{})) {}
ScalarField::ScalarField(std::shared_ptr<const FieldNode> node) : node_(std::move(node)) {}

ScalarField ScalarField::constant(double v) {
  if (!std::isfinite(v)) throw PreconditionError("constant field must be finite");
  return make(Op::Const, v == 0.0 ? 0.0 : v, 0, {});
}

ScalarField ScalarField::coordinate(int i) { return make(Op::Coord, 0.0, i, {}); }

const ExprNode* ScalarField::expr() const { return dynamic_cast<const ExprNode*>(node_.get()); }

bool ScalarField::isExpression() const {
  const ExprNode* e = expr();
  return e != nullptr && e->pure;
}

bool ScalarField::isGrid() const { return node_->isGridNode(); }

std::optional<double> ScalarField::constantValue() const {
  const ExprNode* e = expr();
  if (e != nullptr && e->op == Op::Const) return e->value;
  return std::nullopt;
}

bool ScalarField::isZero() const {
  const auto c = constantValue();
  return c && *c == 0.0;
}

ScalarField ScalarField::operator-() const {
  if (auto c = constantValue()) return constant(-*c);
  const ExprNode* e = expr();
  if (e != nullptr && e->op == Op::Neg) return e->kids[0];
  return make(Op::Neg, 0.0, 0, {*this});
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  const auto ca = a.constantValue(), cb = b.constantValue();
  if (ca && cb) return ScalarField::constant(*ca + *cb);
  if (ca && *ca == 0.0) return b;
  if (cb && *cb == 0.0) return a;
  return make(Op::Add, 0.0, 0, {a, b});
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  const auto ca = a.constantValue(), cb = b.constantValue();
  if (ca && cb) return ScalarField::constant(*ca - *cb);
  if (cb && *cb == 0.0) return a;
  if (ca && *ca == 0.0) return -b;
  return make(Op::Sub, 0.0, 0, {a, b});
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  const auto ca = a.constantValue(), cb = b.constantValue();
  if (ca && cb) return ScalarField::constant(*ca * *cb);
  if ((ca && *ca == 0.0) || (cb && *cb == 0.0)) return ScalarField::constant(0.0);
  if (ca && *ca == 1.0) return b;
  if (cb && *cb == 1.0) return a;
  return make(Op::Mul, 0.0, 0, {a, b});
}

ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  const auto ca = a.constantValue(), cb = b.constantValue();
  if (cb && std::abs(*cb) >= kEpsGuard) {
    if (ca) return ScalarField::constant(*ca / *cb);
    if (*cb == 1.0) return a;
  }
  if (ca && *ca == 0.0 && cb && std::abs(*cb) >= kEpsGuard) return ScalarField::constant(0.0);
  return make(Op::Div, 0.0, 0, {a, b});
}

ScalarField operator*(double s, const ScalarField& f) { return ScalarField::constant(s) * f; }
ScalarField operator+(double s, const ScalarField& f) { return ScalarField::constant(s) + f; }

ScalarField ScalarField::pow(int k) const {
  if (k == 0) return constant(1.0);
  if (k == 1) return *this;
  if (auto c = constantValue()) {
    if (k > 0 || std::abs(*c) >= kEpsGuard) return constant(std::pow(*c, k));
  }
  return make(Op::Pow, 0.0, k, {*this});
}

namespace {
ScalarField unary(Op op, const ScalarField& f, double (*fn)(double), bool guardPositive, bool guardAbs) {
  if (auto c = f.constantValue()) {
    const bool bad = (guardPositive && *c < kEpsGuard) || (guardAbs && std::abs(*c) < kEpsGuard);
    if (!bad) return ScalarField::constant(fn(*c));
  }
  return make(op, 0.0, 0, {f});
}
double sgnFn(double x) { return x < 0 ? -1.0 : 1.0; }
double sinFn(double x) { return std::sin(x); }
double cosFn(double x) { return std::cos(x); }
double expFn(double x) { return std::exp(x); }
double sqrtFn(double x) { return std::sqrt(x); }
double absFn(double x) { return std::abs(x); }
}  // namespace

ScalarField sin(const ScalarField& f) { return unary(Op::Sin, f, sinFn, false, false); }
ScalarField cos(const ScalarField& f) { return unary(Op::Cos, f, cosFn, false, false); }
ScalarField exp(const ScalarField& f) { return unary(Op::Exp, f, expFn, false, false); }
ScalarField sqrt(const ScalarField& f) { return unary(Op::Sqrt, f, sqrtFn, true, false); }
ScalarField abs(const ScalarField& f) { return unary(Op::Abs, f, absFn, false, true); }
ScalarField sgn(const ScalarField& f) { return unary(Op::Sgn, f, sgnFn, false, true); }

ScalarField ScalarField::partial(int m) const {
  if (constantValue()) return constant(0.0);
  return ScalarField(std::make_shared<PartialNode>(*this, m));
}

namespace {
ScalarField rebuild(const ScalarField& f, const std::vector<ScalarField>& subs) {
  const ExprNode* e = f.expr();
  std::vector<ScalarField> k;
  for (const auto& c : e->kids) k.push_back(rebuild(c, subs));
  switch (e->op) {
    case Op::Const: return f;
    case Op::Coord:
      if (e->index >= static_cast<int>(subs.size())) throw DomainError("substitution misses a coordinate");
      return subs[static_cast<std::size_t>(e->index)];
    case Op::Neg: return -k[0];
    case Op::Add: return k[0] + k[1];
    case Op::Sub: return k[0] - k[1];
    case Op::Mul: return k[0] * k[1];
    case Op::Div: return k[0] / k[1];
    case Op::Pow: return k[0].pow(e->index);
    case Op::Sin: return sin(k[0]);
    case Op::Cos: return cos(k[0]);
    case Op::Exp: return exp(k[0]);
    case Op::Sqrt: return sqrt(k[0]);
    case Op::Abs: return abs(k[0]);
    case Op::Sgn: return sgn(k[0]);
  }
  throw std::logic_error("unknown expression node");
}
}  // namespace

std::optional<ScalarField> derivativeExpression(const ScalarField& f, int m) {
  if (!f.isExpression()) return std::nullopt;
  const ExprNode* e = f.expr();
  auto d = [m](const ScalarField& g) { return *derivativeExpression(g, m); };
  const auto& k = e->kids;
  switch (e->op) {
    case Op::Const: return ScalarField::constant(0.0);
    case Op::Coord: return ScalarField::constant(e->index == m ? 1.0 : 0.0);
    case Op::Neg: return -d(k[0]);
    case Op::Add: return d(k[0]) + d(k[1]);
    case Op::Sub: return d(k[0]) - d(k[1]);
    case Op::Mul: return d(k[0]) * k[1] + k[0] * d(k[1]);
    case Op::Div: return (d(k[0]) * k[1] - k[0] * d(k[1])) / k[1].pow(2);
    case Op::Pow: return static_cast<double>(e->index) * k[0].pow(e->index - 1) * d(k[0]);
    case Op::Sin: return cos(k[0]) * d(k[0]);
    case Op::Cos: return -(sin(k[0]) * d(k[0]));
    case Op::Exp: return f * d(k[0]);
    case Op::Sqrt: return d(k[0]) / (2.0 * f);
    case Op::Abs: return sgn(k[0]) * d(k[0]);
    case Op::Sgn: return ScalarField::constant(0.0);
  }
  return std::nullopt;
}

ScalarField ScalarField::substitute(const std::vector<ScalarField>& subs) const {
  if (constantValue()) return *this;
  if (isExpression()) return rebuild(*this, subs);
  return ScalarField(std::make_shared<ComposeNode>(*this, subs));
}

ScalarField ScalarField::embed(const std::vector<int>& map) const {
  std::vector<ScalarField> subs;
  for (int i : map) subs.push_back(coordinate(i));
  return substitute(subs);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const ExprNode& e) {
  switch (e.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Const: return e.value < 0 ? 3 : 5;
    case Op::Pow: return 4;
    default: return 5;
  }
}

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print(const ScalarField& f, const std::vector<std::string>& names, std::string& out);

void printChild(const ScalarField& f, bool parens, const std::vector<std::string>& names, std::string& out) {
  if (parens) out += '(';
  print(f, names, out);
  if (parens) out += ')';
}

void print(const ScalarField& f, const std::vector<std::string>& names, std::string& out) {
  const ExprNode& e = *f.expr();
  const int p = precedence(e);
  switch (e.op) {
    case Op::Const: out += number(e.value); return;
    case Op::Coord:
      if (e.index >= static_cast<int>(names.size())) throw DomainError("coordinate index outside the name list");
      out += names[static_cast<std::size_t>(e.index)];
      return;
    case Op::Neg:
      out += '-';
      printChild(e.kids[0], precedence(*e.kids[0].expr()) < 3, names, out);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int pl = precedence(*e.kids[0].expr()), pr = precedence(*e.kids[1].expr());
      printChild(e.kids[0], pl < p || (p == 2 && pl == 3), names, out);
      out += e.op == Op::Add ? " + " : e.op == Op::Sub ? " - " : e.op == Op::Mul ? "*" : "/";
      printChild(e.kids[1], pr <= p, names, out);
      return;
    }
    case Op::Pow:
      printChild(e.kids[0], precedence(*e.kids[0].expr()) < 5, names, out);
      out += '^';
      out += std::to_string(e.index);
      return;
    default:
      out += funcName(e.op);
      out += '(';
      print(e.kids[0], names, out);
      out += ')';
      return;
  }
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& names) : s_(s), names_(names) {}

  ScalarField run() {
    ScalarField f = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return f;
  }

 private:
  const std::string& s_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarField expr() {
    ScalarField f = term();
    for (;;) {
      if (accept('+')) {
        f = f + term();
      } else if (accept('-')) {
        f = f - term();
      } else {
        return f;
      }
    }
  }

  ScalarField term() {
    ScalarField f = unaryTerm();
    for (;;) {
      if (accept('*')) {
        f = f * unaryTerm();
      } else if (accept('/')) {
        f = f / unaryTerm();
      } else {
        return f;
      }
    }
  }

  ScalarField unaryTerm() {
    if (accept('-')) return -unaryTerm();
    if (accept('+')) return unaryTerm();
    return power();
  }

  ScalarField power() {
    ScalarField base = primary();
    if (accept('^')) {
      skip();
      bool neg = false;
      if (accept('-')) {
        neg = true;
      } else {
        accept('+');
      }
      skip();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("integer exponent expected");
      int k = 0;
      auto r = std::from_chars(s_.data() + start, s_.data() + pos_, k);
      if (r.ec != std::errc()) fail("exponent out of range");
      return base.pow(neg ? -k : k);
    }
    return base;
  }

  ScalarField primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ScalarField f = expr();
      if (!accept(')')) fail("')' expected");
      return f;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return numberLiteral();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string word = s_.substr(start, pos_ - start);
      for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == word) return ScalarField::coordinate(static_cast<int>(i));
      static const std::pair<const char*, ScalarField (*)(const ScalarField&)> funcs[] = {
          {"sin", &lk::sin}, {"cos", &lk::cos}, {"exp", &lk::exp}, {"sqrt", &lk::sqrt}, {"abs", &lk::abs}, {"sgn", &lk::sgn}};
      for (const auto& [name, fn] : funcs) {
        if (word == name) {
          if (!accept('(')) fail("'(' expected after " + word);
          ScalarField arg = expr();
          if (!accept(')')) fail("')' expected");
          return fn(arg);
        }
      }
      pos_ = start;
      fail("unknown identifier '" + word + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  ScalarField numberLiteral() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto r = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (r.ec != std::errc() || r.ptr != s_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    if (!std::isfinite(v)) {
      pos_ = start;
      fail("number out of range");
    }
    return ScalarField::constant(v);
  }
};

std::string describe(const ExprNode& n) {
  const char* fn = funcName(n.op);
  std::string head = *fn ? std::string(fn) : n.op == Op::Div ? std::string("division") : std::string("power");
  if (!n.pure) return head;
  std::vector<std::string> names;
  for (int i = 1; i <= 32; ++i) names.push_back("x" + std::to_string(i));
  std::string body;
  try {
    print(n.kids.back(), names, body);
  } catch (const std::exception&) {
    return head;
  }
  return head + " of " + body;
}

}  // namespace

std::string ScalarField::toString(const std::vector<std::string>& names) const {
  if (!isExpression()) throw PreconditionError("field is not an expression and has no infix form");
  std::string out;
  print(*this, names, out);
  return out;
}

ScalarField ScalarField::parse(const std::string& text, const std::vector<std::string>& names) {
  return Parser(text, names).run();
}

EvalResult evalWithPartials(const ScalarField& f, std::span<const double> q) {
  const Jet j = f.jet(q, 1);
  return {j.value(), j.gradient()};
}

EvalResult evalWithPartials(const Chart& chart, const ScalarField& f, std::span<const double> q) {
  chart.requireInside(q);
  return evalWithPartials(f, q);
}

}  // namespace lk
