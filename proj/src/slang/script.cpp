#include "safe/slang/script.hpp"

#include <cctype>

#include "safe/logic/parser.hpp"

namespace safe::slang {

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#' || (c == '/' && pos_ + 1 < text_.size() &&
                              text_[pos_ + 1] == '/')) {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char peek_at(size_t off) const {
    return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
  }
  void take() {
    if (peek() == '\n') ++line_;
    ++pos_;
  }
  int line() const { return line_; }

  bool try_consume(char c) {
    skip_ws();
    if (peek() != c) return false;
    take();
    return true;
  }
  void expect(char c, const char* what) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "' " + what);
    take();
  }

  std::string ident() {
    skip_ws();
    std::string s;
    while (ident_char(peek())) {
      s += peek();
      take();
    }
    if (s.empty()) fail("expected an identifier");
    return s;
  }

  // Peeks the next identifier without consuming (after whitespace).
  std::string peek_word() {
    skip_ws();
    size_t i = pos_;
    std::string s;
    while (i < text_.size() && ident_char(text_[i])) s += text_[i++];
    return s;
  }

  std::string quoted_string() {
    skip_ws();
    if (peek() != '"') fail("expected a string literal");
    take();
    std::string s;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string literal");
      char c = peek();
      take();
      if (c == '"') break;
      if (c == '\\') {
        char e = peek();
        take();
        switch (e) {
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          case '\\': s += '\\'; break;
          case '"': s += '"'; break;
          default: fail("unknown escape in string literal");
        }
        continue;
      }
      s += c;
    }
    return s;
  }

  // Raw logic text until a top-level terminator ('.' or '?') followed by
  // whitespace/'}'. Quotes are respected. The terminator is consumed;
  // returns (text-without-terminator, terminator).
  std::pair<std::string, char> raw_statement() {
    skip_ws();
    std::string s;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated statement in template");
      char c = peek();
      if (c == '"') {
        s += c;
        take();
        while (true) {
          if (pos_ >= text_.size()) fail("unterminated string in template");
          char q = peek();
          s += q;
          take();
          if (q == '\\') {
            if (pos_ >= text_.size()) fail("unterminated escape");
            s += peek();
            take();
            continue;
          }
          if (q == '"') break;
        }
        continue;
      }
      if (c == '.' || c == '?') {
        char next = peek_at(1);
        bool terminal =
            next == '\0' || next == '}' ||
            std::isspace(static_cast<unsigned char>(next));
        // '?' directly before an identifier is a logic variable.
        if (c == '?' && !terminal) {
          s += c;
          take();
          continue;
        }
        if (terminal) {
          take();
          return {s, c};
        }
      }
      if (c == '}') fail("statement not terminated before '}'");
      s += c;
      take();
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ScriptError(line_, msg);
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
};

class ScriptParser {
 public:
  ScriptParser(std::string_view source, const std::set<std::string>& known_env)
      : sc_(source) {
    known_env_ = {"Self", "BearerRef", "TTL"};
    for (const auto& e : known_env) known_env_.insert(e);
  }

  ScriptModule parse() {
    while (!sc_.eof()) {
      std::string word = sc_.ident();
      if (word == "default") {
        parse_default();
      } else if (word == "defcon") {
        parse_defcon();
      } else if (word == "defguard") {
        parse_defguard();
      } else {
        sc_.fail("expected 'default', 'defcon', or 'defguard', got '" + word +
                 "'");
      }
    }
    validate();
    return std::move(module_);
  }

 private:
  void parse_default() {
    sc_.expect('$', "before default name");
    std::string name = sc_.ident();
    sc_.expect('=', "in default");
    std::string value = sc_.quoted_string();
    sc_.expect('.', "after default");
    if (!module_.defaults.emplace(name, value).second)
      sc_.fail("duplicate default $" + name);
  }

  std::vector<std::string> parse_params() {
    std::vector<std::string> params;
    sc_.expect('(', "after name");
    if (!sc_.try_consume(')')) {
      do {
        sc_.expect('?', "before parameter name");
        params.push_back(sc_.ident());
      } while (sc_.try_consume(','));
      sc_.expect(')', "after parameters");
    }
    sc_.expect(':', "before rule body");
    sc_.expect('-', "before rule body");
    sc_.expect('{', "to open the template");
    return params;
  }

  Expr parse_expr() {
    Expr first = parse_expr_atom();
    if (!sc_.try_consume('+')) return first;
    Expr concat;
    concat.kind = Expr::Kind::Concat;
    concat.line = first.line;
    concat.args.push_back(std::move(first));
    do {
      concat.args.push_back(parse_expr_atom());
    } while (sc_.try_consume('+'));
    return concat;
  }

  Expr parse_expr_atom() {
    sc_.skip_ws();
    Expr e;
    e.line = sc_.line();
    char c = sc_.peek();
    if (c == '"') {
      e.kind = Expr::Kind::Literal;
      e.text = sc_.quoted_string();
      return e;
    }
    if (c == '$') {
      sc_.take();
      e.kind = Expr::Kind::EnvRef;
      e.text = sc_.ident();
      return e;
    }
    if (c == '?') {
      sc_.take();
      e.kind = Expr::Kind::ParamRef;
      e.text = sc_.ident();
      return e;
    }
    std::string name = sc_.ident();
    if (!is_script_builtin(name))
      sc_.fail("unknown builtin '" + name + "' in expression");
    e.kind = Expr::Kind::Call;
    e.text = name;
    sc_.expect('(', "after builtin name");
    if (!sc_.try_consume(')')) {
      do {
        e.args.push_back(parse_expr());
      } while (sc_.try_consume(','));
      sc_.expect(')', "after builtin arguments");
    }
    return e;
  }

  // Parses items shared by defcon and defguard bodies. Returns when '}' is
  // consumed.
  void parse_items(std::vector<TemplateItem>& items, std::string* query_text,
                   int* query_line, bool is_guard) {
    while (true) {
      if (sc_.try_consume('}')) break;
      std::string word = sc_.peek_word();
      int line = sc_.line();
      if (word == "label" && !is_guard) {
        sc_.ident();
        sc_.expect('(', "after label");
        TemplateItem item;
        item.kind = TemplateItem::Kind::Label;
        item.expr = parse_expr();
        item.line = line;
        sc_.expect(')', "after label expression");
        sc_.expect('.', "after label()");
        items.push_back(std::move(item));
      } else if (word == "link") {
        sc_.ident();
        sc_.expect('(', "after link");
        TemplateItem item;
        item.kind = TemplateItem::Kind::Link;
        item.expr = parse_expr();
        item.line = line;
        sc_.expect(')', "after link expression");
        sc_.expect('.', "after link()");
        items.push_back(std::move(item));
      } else if (word == "let") {
        sc_.ident();
        sc_.expect('$', "before let name");
        TemplateItem item;
        item.kind = TemplateItem::Kind::Let;
        item.let_name = sc_.ident();
        item.line = line;
        sc_.expect('=', "in let");
        item.expr = parse_expr();
        sc_.expect('.', "after let");
        items.push_back(std::move(item));
      } else if (word == "post" && !is_guard) {
        sc_.ident();
        sc_.expect('.', "after post");
        TemplateItem item;
        item.kind = TemplateItem::Kind::Post;
        item.line = line;
        items.push_back(std::move(item));
      } else {
        auto [text, term] = sc_.raw_statement();
        if (term == '?') {
          if (!is_guard) sc_.fail("query ('?') only allowed in defguard");
          if (!query_text->empty()) sc_.fail("defguard has multiple queries");
          *query_text = text;
          *query_line = line;
        } else {
          if (is_guard)
            sc_.fail("only link/let and one query are allowed in defguard");
          TemplateItem item;
          item.kind = TemplateItem::Kind::Statement;
          item.statement_text = text + ".";
          item.line = line;
          items.push_back(std::move(item));
        }
      }
    }
    sc_.expect('.', "after template");
  }

  void parse_defcon() {
    DefCon dc;
    dc.name = sc_.ident();
    dc.params = parse_params();
    parse_items(dc.items, nullptr, nullptr, false);
    for (const auto& i : dc.items)
      if (i.kind == TemplateItem::Kind::Statement) ++dc.statement_count;
    if (!module_.defcons.emplace(dc.name, dc).second)
      sc_.fail("duplicate defcon '" + dc.name + "'");
    if (module_.defguards.count(dc.name))
      sc_.fail("name '" + dc.name + "' is both defcon and defguard");
  }

  void parse_defguard() {
    DefGuard dg;
    dg.name = sc_.ident();
    dg.params = parse_params();
    parse_items(dg.items, &dg.query_text, &dg.query_line, true);
    if (dg.query_text.empty())
      sc_.fail("defguard '" + dg.name + "' has no query");
    if (!module_.defguards.emplace(dg.name, dg).second)
      sc_.fail("duplicate defguard '" + dg.name + "'");
    if (module_.defcons.count(dg.name))
      sc_.fail("name '" + dg.name + "' is both defcon and defguard");
  }

  // Load-time validation: every $ref resolves, every template parses with
  // placeholder substitution, exactly one label per defcon.
  void validate() {
    for (auto& [name, dc] : module_.defcons) {
      std::set<std::string> lets;
      int labels = 0;
      for (const auto& item : dc.items) {
        if (item.kind == TemplateItem::Kind::Let) lets.insert(item.let_name);
        if (item.kind == TemplateItem::Kind::Label) ++labels;
        check_item(item, dc.params, lets, name);
      }
      if (labels > 1)
        throw ScriptError(1, "defcon '" + name + "' calls label() twice");
      std::string joined;
      for (const auto& item : dc.items)
        if (item.kind == TemplateItem::Kind::Statement)
          joined += substitute_placeholders(item.statement_text, dc.params,
                                            lets, name) + "\n";
      try {
        auto parsed = logic::parse_program(joined);
        if (parsed.size() != dc.statement_count)
          throw ScriptError(1, "defcon '" + name +
                                   "' template statement count mismatch");
      } catch (const logic::ParseError& e) {
        throw ScriptError(1, "defcon '" + name + "' template: " + e.what());
      }
    }
    for (auto& [name, dg] : module_.defguards) {
      std::set<std::string> lets;
      for (const auto& item : dg.items) {
        if (item.kind == TemplateItem::Kind::Let) lets.insert(item.let_name);
        check_item(item, dg.params, lets, name);
      }
      check_text_refs(dg.query_text, lets, name, dg.query_line);
      try {
        auto q = logic::parse_query(
            substitute_placeholders(dg.query_text, dg.params, lets, name));
        if (q.empty())
          throw ScriptError(dg.query_line,
                            "defguard '" + name + "' query is empty");
      } catch (const logic::ParseError& e) {
        throw ScriptError(dg.query_line,
                          "defguard '" + name + "' query: " + e.what());
      }
    }
  }

  void check_expr(const Expr& e, const std::vector<std::string>& params,
                  const std::set<std::string>& lets, const std::string& owner) {
    switch (e.kind) {
      case Expr::Kind::EnvRef:
        if (!known_env_.count(e.text) && !module_.defaults.count(e.text) &&
            !lets.count(e.text))
          throw ScriptError(e.line, "in '" + owner + "': unbound $" + e.text +
                                        " (no default)");
        break;
      case Expr::Kind::ParamRef:
        if (std::find(params.begin(), params.end(), e.text) == params.end())
          throw ScriptError(e.line,
                            "in '" + owner + "': unknown parameter ?" + e.text);
        break;
      case Expr::Kind::Call:
      case Expr::Kind::Concat:
        for (const auto& a : e.args) check_expr(a, params, lets, owner);
        break;
      case Expr::Kind::Literal:
        break;
    }
  }

  void check_item(const TemplateItem& item,
                  const std::vector<std::string>& params,
                  const std::set<std::string>& lets, const std::string& owner) {
    if (item.kind == TemplateItem::Kind::Statement) {
      check_text_refs(item.statement_text, lets, owner, item.line);
      return;
    }
    if (item.kind != TemplateItem::Kind::Post)
      check_expr(item.expr, params, lets, owner);
  }

  // Walks $refs in raw logic text (outside quotes) and checks bindability.
  void check_text_refs(const std::string& text,
                       const std::set<std::string>& lets,
                       const std::string& owner, int line) {
    for (size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (c == '"') {
        ++i;
        while (i < text.size() && text[i] != '"') {
          if (text[i] == '\\') ++i;
          ++i;
        }
        continue;
      }
      if (c != '$') continue;
      std::string name;
      size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) name += text[j++];
      if (name.empty())
        throw ScriptError(line, "in '" + owner + "': stray '$'");
      if (name != "Self" && !known_env_.count(name) &&
          !module_.defaults.count(name) && !lets.count(name))
        throw ScriptError(line, "in '" + owner + "': unbound $" + name +
                                    " (no default)");
      i = j - 1;
    }
  }

  // Replaces ?param and $env occurrences with distinct placeholder symbols
  // for load-time parse checking.
  std::string substitute_placeholders(const std::string& text,
                                      const std::vector<std::string>& params,
                                      const std::set<std::string>& lets,
                                      const std::string& owner) {
    (void)owner;
    std::string out;
    for (size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (c == '"') {
        out += c;
        ++i;
        while (i < text.size() && text[i] != '"') {
          out += text[i];
          if (text[i] == '\\' && i + 1 < text.size()) out += text[++i];
          ++i;
        }
        if (i < text.size()) out += '"';
        continue;
      }
      if (c == '?' || c == '$') {
        std::string name;
        size_t j = i + 1;
        while (j < text.size() && ident_char(text[j])) name += text[j++];
        bool hole = false;
        if (c == '?' &&
            std::find(params.begin(), params.end(), name) != params.end())
          hole = true;
        if (c == '$' && name != "Self" &&
            (known_env_.count(name) || module_.defaults.count(name) ||
             lets.count(name)))
          hole = true;
        if (hole) {
          out += "phv_" + name;
          i = j - 1;
          continue;
        }
      }
      out += c;
    }
    return out;
  }

  Scanner sc_;
  ScriptModule module_;
  std::set<std::string> known_env_;
};

}  // namespace

bool is_script_builtin(const std::string& name) {
  static const std::set<std::string> names = {
      "scid",      "principalID", "rootID",        "splitHead",
      "splitTail", "tokenFromLabel"};
  return names.count(name) > 0;
}

ScriptModule load_script(std::string_view source,
                         const std::set<std::string>& known_env) {
  return ScriptParser(source, known_env).parse();
}

}  // namespace safe::slang
