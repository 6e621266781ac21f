#include "cobble/frontend.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "cobble/error.hpp"

namespace cobble {

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind;
  std::string text;
  double value = 0.0;
  int line = 1, column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    std::ostringstream os;
    os << "syntax error at line " << at.line << ", column " << at.column << ": " << msg;
    throw Error(ErrorKind::SyntaxError, os.str());
  }

 private:
  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.column = col_;
    if (pos_ >= text_.size()) {
      tok_ = {Token::End, "", 0.0, line_, col_};
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        take();
      tok_.kind = Token::Ident;
      tok_.text = text_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      size_t start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '.' || text_[pos_] == 'e' ||
                                     text_[pos_] == 'E' ||
                                     ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
                                      (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
        take();
      tok_.kind = Token::Number;
      tok_.text = text_.substr(start, pos_ - start);
      char* end = nullptr;
      tok_.value = std::strtod(tok_.text.c_str(), &end);
      if (end != tok_.text.c_str() + tok_.text.size())
        fail("malformed number '" + tok_.text + "'", tok_);
      return;
    }
    if (c == '*' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
      take();
      take();
      tok_ = {Token::Punct, "**", 0.0, tok_.line, tok_.column};
      return;
    }
    static const std::string punct = "+-*/(),[]=:;";
    if (punct.find(c) != std::string::npos) {
      take();
      tok_ = {Token::Punct, std::string(1, c), 0.0, tok_.line, tok_.column};
      return;
    }
    fail(std::string("unexpected character '") + c + "'", tok_);
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else {
        break;
      }
    }
  }

  void take() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

bool is_keyword(const std::string& s) {
  return s == "oracle" || s == "commute" || s == "kron" || s == "dsum" || s == "adj" ||
         s == "Poly" || s == "true" || s == "false";
}

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) {}

  Program run() {
    Program p;
    while (lex_.peek().kind != Token::End) {
      const Token& t = lex_.peek();
      if (t.kind == Token::Ident && t.text == "oracle") {
        parse_oracle(p);
        continue;
      }
      if (t.kind == Token::Ident && t.text == "commute") {
        parse_commute(p);
        continue;
      }
      // "name = expr;" is a binding; anything else is the main expression.
      if (t.kind == Token::Ident && !is_keyword(t.text)) {
        Lexer probe = lex_;
        probe.next();
        if (probe.peek().kind == Token::Punct && probe.peek().text == "=") {
          parse_binding(p);
          continue;
        }
      }
      if (p.main) lex_.fail("unexpected trailing input after main expression", t);
      p.main = parse_expr(p);
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == ";") lex_.next();
    }
    if (!p.main) {
      if (!p.bindings.empty()) {
        // A program consisting only of bindings means the last one.
        p.main = make_ref(p.bindings.back().first);
      } else {
        throw Error(ErrorKind::SyntaxError, "program has no main expression");
      }
    }
    return p;
  }

 private:
  void expect_punct(const std::string& s) {
    const Token& t = lex_.peek();
    if (t.kind != Token::Punct || t.text != s) lex_.fail("expected '" + s + "'", t);
    lex_.next();
  }

  std::string expect_ident() {
    const Token& t = lex_.peek();
    if (t.kind != Token::Ident || is_keyword(t.text)) lex_.fail("expected identifier", t);
    return lex_.next().text;
  }

  double expect_number() {
    bool neg = false;
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "-") {
      lex_.next();
      neg = true;
    }
    const Token& t = lex_.peek();
    if (t.kind != Token::Number) lex_.fail("expected number", t);
    double v = lex_.next().value;
    return neg ? -v : v;
  }

  // Builtins may be shadowed; duplicates among user names may not.
  void check_fresh(const Program& p, const std::string& name) {
    for (const auto& o : p.oracles)
      if (o.name == name)
        throw Error(ErrorKind::DuplicateDeclaration, "duplicate declaration of '" + name + "'");
    for (const auto& b : p.bindings)
      if (b.first == name)
        throw Error(ErrorKind::DuplicateDeclaration, "duplicate declaration of '" + name + "'");
  }

  void parse_oracle(Program& p) {
    lex_.next();  // 'oracle'
    std::string name = expect_ident();
    check_fresh(p, name);
    expect_punct(":");
    OracleDecl d;
    d.name = name;
    bool more = true;
    while (more) {
      std::string key = expect_ident();
      expect_punct("=");
      if (key == "qubits") {
        d.n_qubits = static_cast<int>(expect_number());
      } else if (key == "ancillas") {
        d.ancillas = static_cast<int>(expect_number());
      } else if (key == "subnorm") {
        d.subnorm = expect_number();
      } else if (key == "hermitian") {
        const Token& t = lex_.peek();
        if (t.kind != Token::Ident || (t.text != "true" && t.text != "false"))
          lex_.fail("expected 'true' or 'false'", t);
        d.hermitian = lex_.next().text == "true";
      } else {
        lex_.fail("unknown oracle attribute '" + key + "'", lex_.peek());
      }
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
        lex_.next();
      } else {
        more = false;
      }
    }
    expect_punct(";");
    if (d.n_qubits < 1)
      throw Error(ErrorKind::SyntaxError, "oracle '" + name + "' must have qubits >= 1");
    if (d.ancillas < 0)
      throw Error(ErrorKind::SyntaxError, "oracle '" + name + "' must have ancillas >= 0");
    if (!(d.subnorm > 0.0))
      throw Error(ErrorKind::SyntaxError, "oracle '" + name + "' must have subnorm > 0");
    p.oracles.push_back(std::move(d));
  }

  void parse_commute(Program& p) {
    lex_.next();  // 'commute'
    CommuteDecl c;
    c.left = expect_ident();
    c.right = expect_ident();
    expect_punct(";");
    check_known(p, c.left);
    check_known(p, c.right);
    p.commutes.push_back(std::move(c));
  }

  void check_known(const Program& p, const std::string& name) {
    if (lookup_oracle(p, name)) return;
    for (const auto& b : p.bindings)
      if (b.first == name) return;
    throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + name + "'");
  }

  void parse_binding(Program& p) {
    std::string name = expect_ident();
    check_fresh(p, name);
    expect_punct("=");
    ExprPtr e = parse_expr(p);
    expect_punct(";");
    p.bindings.emplace_back(std::move(name), std::move(e));
  }

  // expr := ['-'] term (('+'|'-') term)*
  ExprPtr parse_expr(const Program& p) {
    std::vector<SumTerm> terms;
    double sign = 1.0;
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "-") {
      lex_.next();
      sign = -1.0;
    }
    terms.push_back(parse_term(p, sign));
    while (lex_.peek().kind == Token::Punct &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      double s = lex_.next().text == "+" ? 1.0 : -1.0;
      terms.push_back(parse_term(p, s));
    }
    if (terms.size() == 1 && terms[0].coeff == 1.0) return terms[0].child;
    return make_sum(std::move(terms));
  }

  // term := [scalar '*'] power ('*' power)*
  // A numeric literal (optionally "a / b") on the left of '*' is a coefficient.
  SumTerm parse_term(const Program& p, double sign) {
    double coeff = sign;
    if (lex_.peek().kind == Token::Number) {
      double v = lex_.next().value;
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == "/") {
        lex_.next();
        const Token& t = lex_.peek();
        if (t.kind != Token::Number) lex_.fail("expected number after '/'", t);
        double d = lex_.next().value;
        if (d == 0.0) lex_.fail("division by zero in scalar", t);
        v /= d;
      }
      coeff *= v;
      expect_punct("*");
    }
    std::vector<ExprPtr> factors;
    factors.push_back(parse_power(p));
    while (lex_.peek().kind == Token::Punct && lex_.peek().text == "*") {
      lex_.next();
      factors.push_back(parse_power(p));
    }
    ExprPtr e = factors.size() == 1 ? factors[0] : make_prod(std::move(factors));
    return {coeff, e};
  }

  // power := atom ['**' INT] ; desugars to an n-ary product of copies
  ExprPtr parse_power(const Program& p) {
    ExprPtr e = parse_atom(p);
    while (lex_.peek().kind == Token::Punct && lex_.peek().text == "**") {
      lex_.next();
      const Token& t = lex_.peek();
      if (t.kind != Token::Number) lex_.fail("expected integer exponent", t);
      double v = lex_.next().value;
      int n = static_cast<int>(v);
      if (v != n || n < 1) lex_.fail("exponent must be a positive integer", t);
      if (n > 1) {
        std::vector<ExprPtr> copies(static_cast<size_t>(n), e);
        e = make_prod(std::move(copies));
      }
    }
    return e;
  }

  ExprPtr parse_atom(const Program& p) {
    const Token& t = lex_.peek();
    if (t.kind == Token::Punct && t.text == "(") {
      lex_.next();
      ExprPtr e = parse_expr(p);
      expect_punct(")");
      return e;
    }
    if (t.kind == Token::Ident) {
      if (t.text == "kron" || t.text == "dsum") {
        bool tensor = t.text == "kron";
        lex_.next();
        expect_punct("(");
        std::vector<ExprPtr> args;
        args.push_back(parse_expr(p));
        while (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
          lex_.next();
          args.push_back(parse_expr(p));
        }
        expect_punct(")");
        if (args.size() == 1) return args[0];
        return tensor ? make_tensor(std::move(args)) : make_choice(std::move(args));
      }
      if (t.text == "adj") {
        lex_.next();
        expect_punct("(");
        ExprPtr e = parse_expr(p);
        expect_punct(")");
        return make_adjoint(std::move(e));
      }
      if (t.text == "Poly") {
        lex_.next();
        expect_punct("(");
        ExprPtr base = parse_expr(p);
        expect_punct(",");
        expect_punct("[");
        std::vector<double> coeffs;
        coeffs.push_back(expect_number());
        while (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
          lex_.next();
          coeffs.push_back(expect_number());
        }
        expect_punct("]");
        expect_punct(")");
        if (coeffs.size() > 1 && coeffs.back() == 0.0)
          throw Error(ErrorKind::SyntaxError, "Poly trailing coefficient must be nonzero");
        return make_poly(std::move(base), std::move(coeffs));
      }
      if (is_keyword(t.text)) lex_.fail("unexpected keyword '" + t.text + "'", t);
      std::string name = lex_.next().text;
      check_known(p, name);
      return make_ref(std::move(name));
    }
    lex_.fail("expected expression", t);
  }

  Lexer lex_;
};

enum Prec { PrecSum = 0, PrecProd = 1, PrecAtom = 2 };

int precedence(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Sum:
      return PrecSum;
    case ExprKind::Prod:
      return PrecProd;
    default:
      return PrecAtom;
  }
}

void print_rec(const ExprPtr& e, int parent_prec, std::string& out);

void print_child(const ExprPtr& e, int parent_prec, std::string& out) {
  bool parens = precedence(e) < parent_prec;
  if (parens) out += "(";
  print_rec(e, PrecSum, out);
  if (parens) out += ")";
}

void print_rec(const ExprPtr& e, int, std::string& out) {
  switch (e->kind) {
    case ExprKind::Ref:
    case ExprKind::Base:
      out += e->name;
      break;
    case ExprKind::Adjoint:
      out += "adj(";
      print_rec(e->child, PrecSum, out);
      out += ")";
      break;
    case ExprKind::Sum: {
      for (size_t i = 0; i < e->terms.size(); ++i) {
        double c = e->terms[i].coeff;
        if (i == 0) {
          if (c < 0) out += "-";
        } else {
          out += c < 0 ? " - " : " + ";
        }
        double mag = std::fabs(c);
        if (mag != 1.0) {
          out += fmt_double(mag);
          out += " * ";
        }
        print_child(e->terms[i].child, PrecProd + 1, out);
      }
      break;
    }
    case ExprKind::Prod: {
      for (size_t i = 0; i < e->factors.size(); ++i) {
        if (i) out += " * ";
        print_child(e->factors[i], PrecAtom, out);
      }
      break;
    }
    case ExprKind::Choice:
    case ExprKind::Tensor: {
      out += e->kind == ExprKind::Tensor ? "kron(" : "dsum(";
      for (size_t i = 0; i < e->factors.size(); ++i) {
        if (i) out += ", ";
        print_rec(e->factors[i], PrecSum, out);
      }
      out += ")";
      break;
    }
    case ExprKind::Poly: {
      out += "Poly(";
      print_child(e->child, PrecAtom, out);
      out += ", [";
      for (size_t i = 0; i < e->coeffs.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(e->coeffs[i]);
      }
      out += "])";
      break;
    }
  }
}

}  // namespace

std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

Program parse(const std::string& text) { return Parser(text).run(); }

std::string print_expr(const ExprPtr& e) {
  std::string out;
  print_rec(e, PrecSum, out);
  return out;
}

std::string print(const Program& p) {
  std::string out;
  for (const auto& o : p.oracles) {
    out += "oracle " + o.name + " : qubits=" + std::to_string(o.n_qubits) +
           ", ancillas=" + std::to_string(o.ancillas) + ", subnorm=" + fmt_double(o.subnorm) +
           ", hermitian=" + (o.hermitian ? "true" : "false") + ";\n";
  }
  for (const auto& c : p.commutes) out += "commute " + c.left + " " + c.right + ";\n";
  for (const auto& b : p.bindings) out += b.first + " = " + print_expr(b.second) + ";\n";
  out += print_expr(p.main) + "\n";
  return out;
}

const OracleDecl* lookup_oracle(const Program& p, const std::string& name) {
  for (const auto& o : p.oracles)
    if (o.name == name) return &o;
  // Builtins are shadowed by bindings as well as user oracles.
  for (const auto& b : p.bindings)
    if (b.first == name) return nullptr;
  return find_builtin(name);
}

namespace {

ExprPtr resolve_rec(const Program& p, const ExprPtr& e,
                    const std::map<std::string, ExprPtr>& env) {
  switch (e->kind) {
    case ExprKind::Ref: {
      auto it = env.find(e->name);
      if (it != env.end()) return it->second;
      if (const OracleDecl* d = lookup_oracle(p, e->name)) return make_base(*d);
      throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + e->name + "'");
    }
    case ExprKind::Base:
      return e;
    case ExprKind::Adjoint:
      return make_adjoint(resolve_rec(p, e->child, env));
    case ExprKind::Poly:
      return make_poly(resolve_rec(p, e->child, env), e->coeffs);
    case ExprKind::Sum: {
      std::vector<SumTerm> terms;
      terms.reserve(e->terms.size());
      for (const auto& t : e->terms) terms.push_back({t.coeff, resolve_rec(p, t.child, env)});
      return make_sum(std::move(terms));
    }
    case ExprKind::Prod:
    case ExprKind::Choice:
    case ExprKind::Tensor: {
      std::vector<ExprPtr> fs;
      fs.reserve(e->factors.size());
      for (const auto& f : e->factors) fs.push_back(resolve_rec(p, f, env));
      if (e->kind == ExprKind::Prod) return make_prod(std::move(fs));
      if (e->kind == ExprKind::Choice) return make_choice(std::move(fs));
      return make_tensor(std::move(fs));
    }
  }
  throw Error(ErrorKind::InternalArity, "unreachable expression kind");
}

std::map<std::string, ExprPtr> binding_env(const Program& p) {
  std::map<std::string, ExprPtr> env;
  for (const auto& b : p.bindings) env[b.first] = resolve_rec(p, b.second, env);
  return env;
}

}  // namespace

ExprPtr resolve(const Program& p) {
  auto env = binding_env(p);
  return resolve_rec(p, p.main, env);
}

std::vector<std::pair<ExprPtr, ExprPtr>> resolved_commutes(const Program& p) {
  auto env = binding_env(p);
  std::vector<std::pair<ExprPtr, ExprPtr>> out;
  out.reserve(p.commutes.size());
  for (const auto& c : p.commutes)
    out.emplace_back(resolve_rec(p, make_ref(c.left), env),
                     resolve_rec(p, make_ref(c.right), env));
  return out;
}

}  // namespace cobble
