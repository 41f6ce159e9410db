#include "safe/logic/parser.hpp"

#include <cctype>
#include <deque>
#include <set>

#include "safe/logic/builtins.hpp"

namespace safe::logic {

namespace {

enum class Tok : uint8_t {
  Symbol,   // bare symbol run (may be joined across ':' into scid/pathname)
  Var,      // ?Name
  EnvRef,   // $Name
  Str,      // "..."
  Typed,    // ipv4"..." or path"..."
  LParen,
  RParen,
  Comma,
  Colon,
  Implies,  // :-
  Dot,
  Query,    // ?
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;  // symbol text / var name / string value
  std::string tag;   // typed-literal tag
  int line = 1, col = 1;
};

bool symbol_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '/';
}

bool ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool plain_identifier(const std::string& s) {
  if (s.empty() || !ident_start(s[0])) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  const Token& peek(size_t n = 0) {
    while (buf_.size() <= n) buf_.push_back(scan());
    return buf_[n];
  }
  Token next() {
    peek(0);
    Token t = buf_.front();
    buf_.pop_front();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) {
    const Token& t = peek(0);
    throw ParseError(t.line, t.col, msg);
  }

 private:
  Token scan() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) return t;
    char c = text_[pos_];
    switch (c) {
      case '(': take(); t.kind = Tok::LParen; return t;
      case ')': take(); t.kind = Tok::RParen; return t;
      case ',': take(); t.kind = Tok::Comma; return t;
      case '?':
        take();
        if (pos_ < text_.size() && (ident_start(text_[pos_]) ||
                                    std::isdigit(static_cast<unsigned char>(text_[pos_])))) {
          t.kind = Tok::Var;
          t.text = lex_ident();
          return t;
        }
        t.kind = Tok::Query;
        return t;
      case '$':
        take();
        t.kind = Tok::EnvRef;
        t.text = lex_ident();
        if (t.text.empty()) err("expected name after '$'");
        return t;
      case ':':
        take();
        if (pos_ < text_.size() && text_[pos_] == '-') {
          take();
          t.kind = Tok::Implies;
          return t;
        }
        t.kind = Tok::Colon;
        return t;
      case '"':
        t.kind = Tok::Str;
        t.text = lex_string();
        return t;
      case '!':
      case '\\':
        err("negation is not supported (pure Datalog)");
      default:
        break;
    }
    if (symbol_char(c)) {
      std::string sym = lex_symbol();
      if (sym == ".") {
        t.kind = Tok::Dot;
        return t;
      }
      if (pos_ < text_.size() && text_[pos_] == '"' &&
          (sym == "ipv4" || sym == "path")) {
        t.kind = Tok::Typed;
        t.tag = sym;
        t.text = lex_string();
        return t;
      }
      t.kind = Tok::Symbol;
      t.text = std::move(sym);
      return t;
    }
    err(std::string("unexpected character '") + c + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else if (c == '#' ||
                 (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/')) {
        while (pos_ < text_.size() && text_[pos_] != '\n') take();
      } else {
        break;
      }
    }
  }

  std::string lex_ident() {
    std::string s;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      s += text_[pos_];
      take();
    }
    return s;
  }

  // Maximal run of symbol chars; '.' is included only when followed by a
  // symbol char (so sentence-final '.' is a terminator) and "//" always
  // starts a comment.
  std::string lex_symbol() {
    std::string s;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (!symbol_char(c)) break;
      if (c == '.') {
        if (s.empty()) {  // symbols never start with '.'
          take();
          return ".";
        }
        bool cont = pos_ + 1 < text_.size() && symbol_char(text_[pos_ + 1]) &&
                    text_[pos_ + 1] != '/';
        if (!cont) break;
      }
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') break;
      s += c;
      take();
    }
    return s;
  }

  std::string lex_string() {
    take();  // opening quote
    std::string s;
    while (true) {
      if (pos_ >= text_.size()) err("unterminated string literal");
      char c = text_[pos_];
      take();
      if (c == '"') break;
      if (c == '\n') err("newline in string literal");
      if (c == '\\') {
        if (pos_ >= text_.size()) err("unterminated escape");
        char e = text_[pos_];
        take();
        switch (e) {
          case 'n': s += '\n'; break;
          case 'r': s += '\r'; break;
          case 't': s += '\t'; break;
          case '\\': s += '\\'; break;
          case '"': s += '"'; break;
          case 'x': {
            auto hexval = [this](char h) -> int {
              if (h >= '0' && h <= '9') return h - '0';
              if (h >= 'a' && h <= 'f') return h - 'a' + 10;
              err("bad \\x escape");
            };
            if (pos_ + 1 >= text_.size()) err("bad \\x escape");
            int hi = hexval(text_[pos_]);
            take();
            int lo = hexval(text_[pos_]);
            take();
            s += static_cast<char>((hi << 4) | lo);
            break;
          }
          default:
            err("unknown escape sequence");
        }
        continue;
      }
      s += c;
    }
    return s;
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

  [[noreturn]] void err(const std::string& msg) const {
    throw ParseError(line_, col_, msg);
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  std::deque<Token> buf_;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  std::vector<Statement> program() {
    std::vector<Statement> out;
    while (lex_.peek().kind != Tok::End) out.push_back(statement());
    return out;
  }

  std::vector<Atom> query() {
    std::vector<Atom> atoms;
    if (lex_.peek().kind == Tok::End) return atoms;
    atoms.push_back(atom());
    while (lex_.peek().kind == Tok::Comma) {
      lex_.next();
      atoms.push_back(atom());
    }
    auto k = lex_.peek().kind;
    if (k == Tok::Query || k == Tok::Dot) lex_.next();
    if (lex_.peek().kind != Tok::End) lex_.fail("trailing input after query");
    return atoms;
  }

  Term single_term() {
    Term t = term();
    if (lex_.peek().kind != Tok::End) lex_.fail("trailing input after term");
    return t;
  }

 private:
  Statement statement() {
    Statement st;
    int line = lex_.peek().line, col = lex_.peek().col;
    st.head = atom();
    if (lex_.peek().kind == Tok::Implies) {
      lex_.next();
      st.body.push_back(atom());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.next();
        st.body.push_back(atom());
      }
    }
    if (lex_.peek().kind != Tok::Dot)
      lex_.fail("expected '.' at end of statement");
    lex_.next();
    check_statement(st, line, col);
    return st;
  }

  // Joins SYM (':' SYM)* for scid/pathname constants. When `stop_at_pred`
  // is set, a ':' whose symbol is immediately followed by '(' is left for
  // the caller (it is the `speaker: predicate(...)` split point).
  std::string joined_symbol(bool stop_at_pred) {
    std::string s = lex_.next().text;
    while (lex_.peek(0).kind == Tok::Colon && lex_.peek(1).kind == Tok::Symbol) {
      if (stop_at_pred && lex_.peek(2).kind == Tok::LParen) break;
      lex_.next();
      s += ':';
      s += lex_.next().text;
    }
    return s;
  }

  Term classify_or_fail(const std::string& sym, int line, int col) {
    try {
      return Term::classify_symbol(sym);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, col, e.what());
    }
  }

  Term term() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Var:
        return Term::variable(lex_.next().text);
      case Tok::Str:
        return Term::string(lex_.next().text);
      case Tok::Typed: {
        Token s = lex_.next();
        try {
          return s.tag == "ipv4" ? Term::ipv4_prefix(s.text)
                                 : Term::pathname(s.text);
        } catch (const std::invalid_argument& e) {
          throw ParseError(s.line, s.col, e.what());
        }
      }
      case Tok::EnvRef: {
        Token s = lex_.next();
        if (s.text != "Self")
          throw ParseError(s.line, s.col,
                           "unresolved environment variable $" + s.text);
        return Term::self_ref();
      }
      case Tok::Symbol: {
        int line = t.line, col = t.col;
        std::string sym = joined_symbol(/*stop_at_pred=*/false);
        if (lex_.peek().kind == Tok::LParen)
          lex_.fail("function symbols are not supported (pure Datalog)");
        return classify_or_fail(sym, line, col);
      }
      default:
        lex_.fail("expected a term");
    }
  }

  Atom atom() {
    Atom a;
    a.speaker = Term::self_ref();
    const Token& t = lex_.peek();
    int line = t.line, col = t.col;
    std::optional<Term> pre;
    std::string pre_sym;
    bool pre_is_sym = false;
    switch (t.kind) {
      case Tok::Var:
      case Tok::Str:
      case Tok::Typed:
      case Tok::EnvRef:
        pre = term();
        break;
      case Tok::Symbol:
        pre_sym = joined_symbol(/*stop_at_pred=*/true);
        pre_is_sym = true;
        break;
      default:
        lex_.fail("expected an atom");
    }

    if (lex_.peek().kind == Tok::Colon) {
      lex_.next();
      a.speaker = pre_is_sym ? classify_or_fail(pre_sym, line, col) : *pre;
      if (lex_.peek().kind != Tok::Symbol)
        lex_.fail("expected predicate after speaker prefix");
      Token p = lex_.next();
      if (!plain_identifier(p.text))
        throw ParseError(p.line, p.col, "invalid predicate name: " + p.text);
      a.predicate = p.text;
    } else {
      if (!pre_is_sym) lex_.fail("expected predicate");
      if (!plain_identifier(pre_sym))
        throw ParseError(line, col, "invalid predicate name: " + pre_sym);
      a.predicate = pre_sym;
    }

    if (a.predicate == "not")
      throw ParseError(line, col, "negation is not supported (pure Datalog)");

    if (lex_.peek().kind == Tok::LParen) {
      lex_.next();
      if (lex_.peek().kind != Tok::RParen) {
        a.args.push_back(term());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.next();
          a.args.push_back(term());
        }
      }
      if (lex_.peek().kind != Tok::RParen) lex_.fail("expected ')'");
      lex_.next();
    }
    return a;
  }

  static void collect_vars(const Atom& a, std::set<std::string>& out) {
    if (a.speaker.is_variable()) out.insert(a.speaker.text());
    for (const auto& arg : a.args)
      if (arg.is_variable()) out.insert(arg.text());
  }

  void check_statement(const Statement& st, int line, int col) {
    if (is_reserved_predicate(st.head.predicate))
      throw ParseError(line, col,
                       "cannot define reserved builtin predicate '" +
                           st.head.predicate + "'");
    std::set<std::string> head_vars;
    collect_vars(st.head, head_vars);

    if (st.body.empty()) {
      if (!head_vars.empty())
        throw ParseError(line, col,
                         "fact is not ground: variable ?" + *head_vars.begin());
      return;
    }

    // Left-to-right safety: builtin arguments must be bound by earlier
    // non-builtin atoms; `equals` may bind one fresh variable.
    std::set<std::string> seen;
    for (const auto& b : st.body) {
      if (is_builtin_name(b.predicate)) {
        std::set<std::string> vars;
        collect_vars(b, vars);
        std::vector<std::string> unseen;
        for (const auto& v : vars)
          if (!seen.count(v)) unseen.push_back(v);
        if (b.predicate == "equals" && unseen.size() <= 1) {
          for (const auto& v : unseen) seen.insert(v);
        } else if (!unseen.empty()) {
          throw ParseError(line, col,
                           "unsafe builtin use: variable ?" + unseen.front() +
                               " not bound before " + b.predicate);
        }
      } else {
        collect_vars(b, seen);
      }
    }
    for (const auto& v : head_vars) {
      if (!seen.count(v))
        throw ParseError(
            line, col, "head variable ?" + v + " does not occur in the body");
    }
  }

  Lexer lex_;
};

}  // namespace

std::vector<Statement> parse_program(std::string_view text) {
  return Parser(text).program();
}

std::vector<Atom> parse_query(std::string_view text) {
  return Parser(text).query();
}

Term parse_term(std::string_view text) { return Parser(text).single_term(); }

}  // namespace safe::logic
