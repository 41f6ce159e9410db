#include "safe/slang/interpreter.hpp"

#include <algorithm>

#include "safe/logic/parser.hpp"

namespace safe::slang {

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Renders a string value as a single logic term: structured shapes (numbers,
// principals, scids, pathnames, ipv4 prefixes) keep their kind; everything
// else becomes a (quoted if needed) string constant.
std::string value_as_term(const std::string& value) {
  try {
    return logic::Term::classify_symbol(value).canonical();
  } catch (const std::invalid_argument&) {
    return logic::quote_string(value);
  }
}

std::string split_head(const std::string& path) {
  auto colon = path.find(':');
  std::string rest = colon == std::string::npos ? path : path.substr(colon + 1);
  std::string root = colon == std::string::npos ? "" : path.substr(0, colon + 1);
  auto slash = rest.find('/');
  return root + (slash == std::string::npos ? rest : rest.substr(0, slash));
}

std::string split_tail(const std::string& path) {
  auto colon = path.find(':');
  std::string rest = colon == std::string::npos ? path : path.substr(colon + 1);
  auto slash = rest.find('/');
  return slash == std::string::npos ? "" : rest.substr(slash + 1);
}

}  // namespace

struct EvalScope {
  const Interpreter& interp;
  std::unordered_map<std::string, std::string> vars;  // env + lets
  const std::vector<std::string>* params = nullptr;
  std::unordered_map<std::string, std::string> param_values;

  std::string lookup_env(const std::string& name, int line) const {
    auto it = vars.find(name);
    if (it == vars.end())
      throw SlangError("line " + std::to_string(line) + ": unbound $" + name);
    return it->second;
  }

  std::string eval(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::Literal:
        return e.text;
      case Expr::Kind::EnvRef:
        return lookup_env(e.text, e.line);
      case Expr::Kind::ParamRef: {
        auto it = param_values.find(e.text);
        if (it == param_values.end())
          throw SlangError("line " + std::to_string(e.line) +
                           ": unknown parameter ?" + e.text);
        return it->second;
      }
      case Expr::Kind::Concat: {
        std::string out;
        for (const auto& a : e.args) out += eval(a);
        return out;
      }
      case Expr::Kind::Call:
        return call(e);
    }
    throw SlangError("bad expression");
  }

  std::string call(const Expr& e) const {
    auto arg = [&](size_t i) -> std::string {
      if (i >= e.args.size())
        throw SlangError("line " + std::to_string(e.line) + ": " + e.text +
                         " needs more arguments");
      return eval(e.args[i]);
    };
    if (e.text == "scid") {
      auto self = cert::PrincipalId::parse(lookup_env("Self", e.line));
      if (!self) throw SlangError("$Self is not a principalID");
      return cert::new_scid(*self, interp.guids_).text();
    }
    if (e.text == "principalID") {
      if (e.args.empty()) return lookup_env("Self", e.line);
      auto pub = cert::base64url_decode(arg(0));
      if (!pub)
        throw SlangError("principalID: argument is not base64url key bytes");
      return cert::principal_id("ed25519", *pub).text();
    }
    if (e.text == "rootID") {
      auto scid = cert::Scid::parse(arg(0));
      if (!scid) throw SlangError("rootID: malformed scid: " + arg(0));
      return cert::root_id(*scid).text();
    }
    if (e.text == "splitHead") return split_head(arg(0));
    if (e.text == "splitTail") return split_tail(arg(0));
    if (e.text == "tokenFromLabel") {
      auto p = cert::PrincipalId::parse(arg(1));
      if (!p)
        throw SlangError("tokenFromLabel: malformed principalID: " + arg(1));
      return cert::make_token(*p, arg(0)).text();
    }
    throw SlangError("unknown builtin: " + e.text);
  }

  // Token-aware interpolation of ?params and $vars into logic text; values
  // are spliced as single canonical terms so crafted arguments cannot inject
  // statements.
  std::string interpolate(const std::string& text) const {
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
        if (c == '?') {
          auto it = param_values.find(name);
          if (it != param_values.end()) {
            out += value_as_term(it->second);
            i = j - 1;
            continue;
          }
        } else {
          auto it = vars.find(name);
          if (it == vars.end())
            throw SlangError("unbound $" + name + " in logic template");
          out += value_as_term(it->second);
          i = j - 1;
          continue;
        }
      }
      out += c;
    }
    return out;
  }
};

Interpreter::Interpreter(store::StoreClient& store,
                         cache::ContextService& contexts,
                         std::shared_ptr<cache::Clock> clock,
                         cert::GuidSource guids, InterpreterConfig config)
    : store_(store),
      contexts_(contexts),
      clock_(std::move(clock)),
      guids_(std::move(guids)),
      config_(config) {}

static EvalScope make_scope(const Interpreter& interp,
                            const ScriptModule& module,
                            const std::vector<std::string>& params,
                            const std::vector<std::string>& args,
                            const Env& env, const std::string& what) {
  if (args.size() != params.size())
    throw SlangError(what + ": expected " + std::to_string(params.size()) +
                     " arguments, got " + std::to_string(args.size()));
  EvalScope scope{interp, {}, &params, {}};
  for (const auto& [k, v] : module.defaults) scope.vars[k] = v;
  for (const auto& [k, v] : env.bindings) scope.vars[k] = v;
  if (env.key) scope.vars["Self"] = cert::principal_id(*env.key).text();
  for (size_t i = 0; i < params.size(); ++i)
    scope.param_values[params[i]] = args[i];
  return scope;
}

DefConResult Interpreter::invoke_defcon(const ScriptModule& module,
                                        const std::string& name,
                                        const std::vector<std::string>& args,
                                        Env env) {
  auto it = module.defcons.find(name);
  if (it == module.defcons.end()) throw SlangError("unknown defcon: " + name);
  const DefCon& dc = it->second;
  if (!env.key) throw SlangError("defcon requires a signing key for $Self");
  EvalScope scope = make_scope(*this, module, dc.params, args, env, name);

  std::optional<std::string> label;
  std::vector<cert::Token> links;
  std::vector<std::string> statement_texts;
  bool do_post = false;

  for (const auto& item : dc.items) {
    switch (item.kind) {
      case TemplateItem::Kind::Let:
        scope.vars[item.let_name] = scope.eval(item.expr);
        break;
      case TemplateItem::Kind::Label:
        label = scope.eval(item.expr);
        break;
      case TemplateItem::Kind::Link: {
        std::string text = scope.eval(item.expr);
        auto tok = cert::Token::parse(text);
        if (!tok)
          throw SlangError(name + ": link() is not a token: " + text);
        links.push_back(*tok);
        break;
      }
      case TemplateItem::Kind::Post:
        do_post = true;
        break;
      case TemplateItem::Kind::Statement:
        statement_texts.push_back(scope.interpolate(item.statement_text));
        break;
    }
  }
  if (!label) label = dc.name;  // unlabeled templates post under their name

  std::vector<logic::Statement> statements;
  for (const auto& text : statement_texts) {
    std::vector<logic::Statement> parsed;
    try {
      parsed = logic::parse_program(text);
    } catch (const logic::ParseError& e) {
      throw SlangError(name + ": interpolation produced ill-formed logic: " +
                       e.what());
    }
    if (parsed.size() != 1)
      throw SlangError(name + ": interpolation changed statement count");
    statements.push_back(std::move(parsed[0]));
  }

  int64_t ttl = config_.default_ttl_ms;
  if (auto t = scope.vars.find("TTL"); t != scope.vars.end()) {
    try {
      ttl = std::stoll(t->second);
    } catch (...) {
      throw SlangError(name + ": $TTL is not a number");
    }
  }
  int64_t now = clock_->now_ms();

  DefConResult result;
  try {
    result.certificate = cert::build_and_sign(*label, std::move(statements),
                                              std::move(links), now, now + ttl,
                                              *env.key);
  } catch (const cert::CertError& e) {
    throw SlangError(name + ": " + e.what());
  }
  result.token = result.certificate.token();

  if (do_post) {
    auto out = store_.post(cert::encode_certificate(result.certificate),
                           result.token);
    if (!out.ok)
      throw SlangError(name + ": post rejected: " +
                       std::string(store::store_error_name(out.code)) +
                       (out.message.empty() ? "" : " (" + out.message + ")"));
    result.posted = true;
  }
  return result;
}

GuardResult Interpreter::invoke_defguard(const ScriptModule& module,
                                         const std::string& name,
                                         const std::vector<std::string>& args,
                                         Env env) {
  auto it = module.defguards.find(name);
  if (it == module.defguards.end())
    throw SlangError("unknown defguard: " + name);
  const DefGuard& dg = it->second;
  EvalScope scope = make_scope(*this, module, dg.params, args, env, name);
  if (env.key) scope.vars["Self"] = cert::principal_id(*env.key).text();

  GuardResult result;
  std::vector<cert::Token> roots;
  try {
    for (const auto& item : dg.items) {
      if (item.kind == TemplateItem::Kind::Let) {
        scope.vars[item.let_name] = scope.eval(item.expr);
      } else if (item.kind == TemplateItem::Kind::Link) {
        std::string text = scope.eval(item.expr);
        auto tok = cert::Token::parse(text);
        if (!tok) throw SlangError(name + ": link() is not a token: " + text);
        roots.push_back(*tok);
      }
    }
  } catch (const SlangError& e) {
    result.diagnostics.error = e.what();
    return result;
  }
  result.diagnostics.context_roots = roots;

  std::vector<logic::Atom> query;
  try {
    query = logic::parse_query(scope.interpolate(dg.query_text));
  } catch (const std::exception& e) {
    result.diagnostics.error = std::string("query: ") + e.what();
    return result;
  }

  auto run = [&](const cache::AssembledContext& ctx) {
    auto proof = logic::prove_conjunction(*ctx.context, query,
                                          config_.guard_limits);
    result.diagnostics.prover_steps += proof.steps;
    result.diagnostics.stop_reason = std::string(stop_reason_name(proof.stop));
    result.diagnostics.context_members = ctx.members;
    result.diagnostics.statement_count = ctx.statement_count;
    if (proof.holds) {
      result.allowed = true;
      result.bindings = std::move(proof.answers);
    }
  };

  try {
    cache::AssembledContext ctx = contexts_.assemble(roots);
    run(ctx);
    if (!result.allowed) {
      // One refresh-and-retry, then final deny.
      auto refresh = contexts_.refresh_on_failure(ctx);
      if (refresh.refreshed && refresh.rebuilt) {
        result.diagnostics.refresh_attempts = 1;
        run(*refresh.rebuilt);
      }
    }
  } catch (const cache::AssembleError& e) {
    result.allowed = false;
    result.diagnostics.error = std::string("context assembly: ") + e.what();
    return result;
  } catch (const std::exception& e) {
    // Fail closed on any evaluation error (unknown builtin, arity conflict).
    result.allowed = false;
    result.diagnostics.error = e.what();
    return result;
  }
  return result;
}

}  // namespace safe::slang
