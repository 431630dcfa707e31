#include "symkit/parse.hpp"

#include <algorithm>
#include <cctype>

namespace symkit {

ParseError::ParseError(const std::string& what, std::size_t position)
    : Error("parse error at offset " + std::to_string(position) + ": " + what), position_(position) {}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

bool Declarations::is_indep(const std::string& n) const { return contains(indep, n); }
bool Declarations::is_dep(const std::string& n) const { return contains(dep, n); }
bool Declarations::is_param(const std::string& n) const { return contains(params, n); }
bool Declarations::is_fun(const std::string& n) const { return fun_args.count(n) != 0; }
bool Declarations::is_declared(const std::string& n) const {
  return is_indep(n) || is_dep(n) || is_param(n) || is_fun(n);
}

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), i});
      i = j;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      out.push_back({Tok::Number, s.substr(i, j - i), i});
      i = j;
    } else if (c == '*' && i + 1 < s.size() && s[i + 1] == '*') {
      out.push_back({Tok::Punct, "^", i});
      i += 2;
    } else if (std::string("+-*/^(),;=[]").find(static_cast<char>(c)) != std::string::npos) {
      out.push_back({Tok::Punct, std::string(1, static_cast<char>(c)), i});
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

Rational parse_decimal(const std::string& text) {
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(mpz_class(text));
  std::string whole = text.substr(0, dot);
  std::string frac = text.substr(dot + 1);
  mpz_class num(whole.empty() ? "0" : whole);
  mpz_class den = 1;
  for (char ch : frac) {
    num = num * 10 + (ch - '0');
    den *= 10;
  }
  Rational q(num, den);
  q.canonicalize();
  return q;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, Declarations* decl) : toks_(std::move(toks)), decl_(decl) {}

  Program program() {
    Program prog;
    while (peek().kind != Tok::End) {
      if (accept(";")) continue;
      Token kw = expect_ident("statement keyword");
      if (kw.text == "indep") {
        declare_list([&](const Token& t) { decl_->indep.push_back(t.text); });
      } else if (kw.text == "param") {
        declare_list([&](const Token& t) { decl_->params.push_back(t.text); });
      } else if (kw.text == "dep") {
        declare_list([&](const Token& t) {
          if (accept("(")) parse_name_list(true);
          decl_->dep.push_back(t.text);
        });
      } else if (kw.text == "fun") {
        declare_list([&](const Token& t) {
          std::vector<std::string> args;
          if (accept("(")) args = parse_name_list(true);
          decl_->funs.push_back(t.text);
          decl_->fun_args[t.text] = args;
        });
      } else if (kw.text == "eq") {
        Expr lhs = expression();
        Expr rhs;
        if (accept("=")) rhs = expression();
        prog.equations.push_back({lhs, rhs});
      } else if (kw.text == "lagrangian") {
        if (prog.lagrangian) throw ParseError("duplicate lagrangian", kw.pos);
        prog.lagrangian = expression();
      } else if (kw.text == "gen") {
        prog.generators.push_back(expression());
      } else {
        throw ParseError("unknown statement '" + kw.text + "'", kw.pos);
      }
      expect(";");
    }
    prog.decl = *decl_;
    return prog;
  }

  Expr single_expression() {
    Expr e = expression();
    accept(";");
    if (peek().kind != Tok::End) throw ParseError("unexpected '" + peek().text + "'", peek().pos);
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& peek2() const { return toks_[std::min(pos_ + 1, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool accept(const char* p) {
    if (peek().kind == Tok::Punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(const char* p) {
    if (!accept(p)) {
      const Token& t = peek();
      throw ParseError(std::string("expected '") + p + "' but found " +
                           (t.kind == Tok::End ? std::string("end of input") : "'" + t.text + "'"),
                       t.pos);
    }
  }

  Token expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) {
      throw ParseError(std::string("expected ") + what, peek().pos);
    }
    return next();
  }

  template <class F>
  void declare_list(F on_name) {
    do {
      Token t = expect_ident("identifier");
      if (decl_->is_declared(t.text) || elem_from_name(t.text) || t.text == "diff" || t.text == "sqrt" ||
          t.text == "D") {
        throw ParseError("symbol '" + t.text + "' already declared or reserved", t.pos);
      }
      on_name(t);
    } while (accept(","));
  }

  // After '(' has been consumed.
  std::vector<std::string> parse_name_list(bool allow_empty) {
    std::vector<std::string> names;
    if (allow_empty && accept(")")) return names;
    do {
      names.push_back(expect_ident("variable name").text);
    } while (accept(","));
    expect(")");
    return names;
  }

  Expr expression() {
    Expr acc;
    bool first = true;
    for (;;) {
      bool negate = false;
      if (first) {
        first = false;
        if (accept("-")) {
          negate = true;
        } else {
          accept("+");
        }
      } else if (accept("+")) {
      } else if (accept("-")) {
        negate = true;
      } else {
        break;
      }
      Expr t = term();
      acc = negate ? acc - t : acc + t;
    }
    return acc;
  }

  Expr term() {
    Expr acc = unary();
    for (;;) {
      if (accept("*")) {
        acc = acc * unary();
      } else if (accept("/")) {
        std::size_t at = peek().pos;
        Expr d = unary();
        if (d.is_zero()) throw ParseError("division by zero", at);
        acc = acc / d;
      } else {
        break;
      }
    }
    return acc;
  }

  Expr unary() {
    if (accept("-")) return -unary();
    if (accept("+")) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept("^")) {
      std::size_t at = peek().pos;
      Expr ex = unary_exponent();
      auto q = ex.as_rational();
      if (!q) throw ParseError("exponent must be a rational constant", at);
      if (base.is_zero() && *q < 0) throw ParseError("division by zero", at);
      return pow(base, *q);
    }
    return base;
  }

  Expr unary_exponent() {
    if (accept("-")) return -unary_exponent();
    if (accept("+")) return unary_exponent();
    return power();
  }

  Expr primary() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      next();
      return Expr(parse_decimal(t.text));
    }
    if (accept("(")) {
      Expr e = expression();
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) {
      throw ParseError(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'", t.pos);
    }
    next();
    const std::string& name = t.text;
    if (name == "D" && accept("[")) {
      Token v = expect_ident("variable name");
      if (!decl_->is_indep(v.text) && !decl_->is_dep(v.text)) {
        throw ParseError("undeclared variable '" + v.text + "' in D[...]", v.pos);
      }
      expect("]");
      return Expr::from_atom(dop_atom(v.text));
    }
    if (peek().kind == Tok::Punct && peek().text == "(") {
      if (auto tag = elem_from_name(name)) {
        next();
        Expr arg = expression();
        expect(")");
        return elem(*tag, arg);
      }
      if (name == "sqrt") {
        next();
        Expr arg = expression();
        expect(")");
        return pow(arg, Rational(1, 2));
      }
      if (name == "diff") {
        next();
        return diff_call(t.pos);
      }
      if (decl_->is_fun(name) || decl_->is_dep(name)) {
        next();
        std::size_t at = peek().pos;
        auto args = parse_name_list(true);
        if (decl_->is_fun(name) && args != decl_->fun_args.at(name)) {
          throw ParseError("arguments of '" + name + "' do not match its declaration", at);
        }
        return symbol(name, t.pos);
      }
      throw ParseError("undeclared function '" + name + "'", t.pos);
    }
    return symbol(name, t.pos);
  }

  Expr symbol(const std::string& name, std::size_t pos) {
    if (decl_->is_indep(name)) return indep(name);
    if (decl_->is_dep(name)) return dep(name);
    if (decl_->is_param(name)) return param(name);
    if (decl_->is_fun(name)) return fn(name, decl_->fun_args.at(name));
    throw ParseError("undeclared symbol '" + name + "'", pos);
  }

  // After "diff(" has been consumed.
  Expr diff_call(std::size_t pos) {
    Expr target = expression();
    std::vector<std::pair<std::string, std::size_t>> vars;
    while (accept(",")) {
      const Token v = next();
      if (v.kind == Tok::Number) {
        if (vars.empty() || v.text.find('.') != std::string::npos) {
          throw ParseError("derivative count must follow a variable", v.pos);
        }
        long n = std::stol(v.text);
        if (n < 1 || n > 64) throw ParseError("derivative count out of range", v.pos);
        auto last = vars.back();
        for (long k = 1; k < n; ++k) vars.push_back(last);
      } else if (v.kind == Tok::Ident) {
        if (!decl_->is_indep(v.text) && !decl_->is_dep(v.text) && !decl_->is_param(v.text)) {
          throw ParseError("undeclared variable '" + v.text + "'", v.pos);
        }
        vars.push_back({v.text, v.pos});
      } else {
        throw ParseError("expected variable name", v.pos);
      }
    }
    expect(")");
    if (vars.empty()) throw ParseError("diff needs at least one variable", pos);
    Atom a = target.as_atom();
    if (a && (a->kind == AtomKind::Dep || a->kind == AtomKind::Jet)) {
      std::vector<std::string> idx = a->index;
      for (const auto& [v, at] : vars) {
        if (!decl_->is_indep(v)) throw ParseError("'" + v + "' is not an independent variable", at);
        idx.push_back(v);
      }
      return jet(a->name, idx);
    }
    for (const auto& [v, at] : vars) target = pdiff_var(target, v);
    return target;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Declarations* decl_;
};

}  // namespace

Program parse_program(const std::string& text) {
  Declarations decl;
  Parser p(tokenize(text), &decl);
  return p.program();
}

Expr parse_expr(const std::string& text, const Declarations& decl) {
  Declarations copy = decl;
  Parser p(tokenize(text), &copy);
  return p.single_expression();
}

}  // namespace symkit
