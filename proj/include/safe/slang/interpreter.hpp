#pragma once

#include <memory>
#include <optional>
#include <unordered_map>

#include "safe/cache/context_service.hpp"
#include "safe/cert/certificate.hpp"
#include "safe/logic/solver.hpp"
#include "safe/slang/script.hpp"
#include "safe/store/store.hpp"

namespace safe::slang {

struct SlangError : std::runtime_error {
  explicit SlangError(const std::string& msg) : std::runtime_error(msg) {}
};

// Per-invocation environment: $-bindings plus the signing key for $Self.
// Scoped to one invocation; never shared.
struct Env {
  std::unordered_map<std::string, std::string> bindings;  // names without '$'
  const cert::KeyPair* key = nullptr;

  Env& bind(const std::string& name, const std::string& value) {
    bindings[name] = value;
    return *this;
  }
};

struct DefConResult {
  cert::Certificate certificate;
  cert::Token token;
  bool posted = false;
};

struct GuardDiagnostics {
  std::vector<cert::Token> context_roots;
  std::vector<cert::Token> context_members;
  size_t statement_count = 0;
  uint64_t prover_steps = 0;
  int refresh_attempts = 0;
  std::string stop_reason;
  std::string error;  // nonempty on context-assembly or evaluation errors
};

struct GuardResult {
  bool allowed = false;
  std::vector<logic::Answer> bindings;
  GuardDiagnostics diagnostics;
};

struct InterpreterConfig {
  int64_t default_ttl_ms = 3'600'000;
  logic::SolveLimits guard_limits{1, 50'000'000, 10'000};
};

// Executes defcon (set construction, signing, posting) and defguard
// (context assembly + guard query with one refresh-and-retry) invocations.
// Shares the store and caches; each invocation owns its Env.
class Interpreter {
 public:
  Interpreter(store::StoreClient& store, cache::ContextService& contexts,
              std::shared_ptr<cache::Clock> clock, cert::GuidSource guids,
              InterpreterConfig config = {});

  DefConResult invoke_defcon(const ScriptModule& module,
                             const std::string& name,
                             const std::vector<std::string>& args, Env env);

  GuardResult invoke_defguard(const ScriptModule& module,
                              const std::string& name,
                              const std::vector<std::string>& args, Env env);

  cache::ContextService& contexts() { return contexts_; }
  const InterpreterConfig& config() const { return config_; }

 private:
  friend struct EvalScope;
  store::StoreClient& store_;
  cache::ContextService& contexts_;
  std::shared_ptr<cache::Clock> clock_;
  cert::GuidSource guids_;
  InterpreterConfig config_;
};

}  // namespace safe::slang
