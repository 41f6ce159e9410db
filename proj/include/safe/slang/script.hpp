#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace safe::slang {

struct ScriptError : std::runtime_error {
  ScriptError(int line, const std::string& msg)
      : std::runtime_error("script error at line " + std::to_string(line) +
                           ": " + msg),
        line(line) {}
  int line;
};

// String-valued expressions inside defcon/defguard bodies: literals, $env
// refs, ?param refs, builtin calls, and '+' concatenation.
struct Expr {
  enum class Kind : uint8_t { Literal, EnvRef, ParamRef, Call, Concat };
  Kind kind = Kind::Literal;
  std::string text;        // literal value / ref name / call name
  std::vector<Expr> args;  // call arguments or concat parts
  int line = 0;
};

struct TemplateItem {
  enum class Kind : uint8_t { Label, Link, Let, Post, Statement };
  Kind kind;
  Expr expr;                   // Label/Link/Let payload
  std::string let_name;        // Let target (without '$')
  std::string statement_text;  // raw logic text with ?param/$env holes
  int line = 0;
};

struct DefCon {
  std::string name;
  std::vector<std::string> params;  // without '?'
  std::vector<TemplateItem> items;
  size_t statement_count = 0;
};

struct DefGuard {
  std::string name;
  std::vector<std::string> params;
  std::vector<TemplateItem> items;  // links and lets only
  std::string query_text;           // conjunctive query with holes
  int query_line = 0;
};

struct ScriptModule {
  std::map<std::string, DefCon> defcons;
  std::map<std::string, DefGuard> defguards;
  std::map<std::string, std::string> defaults;  // env-variable defaults
};

// Parses and validates a script. `known_env` lists env variables bound at
// invocation time beyond the built-ins ($Self, $BearerRef, $TTL); referencing
// any other $var without a default is a load-time error.
ScriptModule load_script(std::string_view source,
                         const std::set<std::string>& known_env = {});

// The slang expression builtins (Table-style helpers available in scripts).
bool is_script_builtin(const std::string& name);

}  // namespace safe::slang
