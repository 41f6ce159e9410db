#pragma once

#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "safe/slang/interpreter.hpp"

#include <json.hpp>

namespace safe::guard {

struct ServiceConfig {
  std::vector<std::string> script_files;
  std::string shared_secret;  // empty = no request authn
  std::set<std::string> extra_env;
  cache::ContextServiceConfig cache;
  slang::InterpreterConfig interp;
};

// Transport-independent guard core: the principal's key, loaded scripts,
// and the caches. Stateless across restarts except for the caches.
class GuardCore {
 public:
  GuardCore(cert::KeyPair key, store::StoreClient& store,
            std::shared_ptr<cache::Clock> clock, ServiceConfig config);

  // Loads scripts from the given sources; throws on any error (fail fast at
  // startup).
  void load_scripts(const std::vector<std::string>& sources);

  // Atomic swap: on error the old module stays active and `error` is set.
  bool reload_scripts(const std::vector<std::string>& sources,
                      std::string* error);

  struct Response {
    bool found = false;  // entry exists (routing, not policy)
    int status = 404;
    nlohmann::json body;
  };

  // Dispatches one request. Keys starting with '$' bind env variables
  // (e.g. $BearerRef); other keys bind defguard parameters by name.
  Response handle(const std::string& entry, const nlohmann::json& params);

  // In-process invocation used by drivers and the bench harness.
  slang::GuardResult invoke(const std::string& entry,
                            const std::vector<std::string>& args,
                            slang::Env env);

  const cert::PrincipalId& self() const { return self_; }
  cache::ContextService& contexts() { return contexts_; }
  slang::Interpreter& interpreter() { return interp_; }
  std::shared_ptr<const slang::ScriptModule> module();

 private:
  cert::KeyPair key_;
  cert::PrincipalId self_;
  ServiceConfig config_;
  cache::ContextService contexts_;
  slang::Interpreter interp_;
  std::mutex module_mu_;
  std::shared_ptr<const slang::ScriptModule> module_;
};

// REST front (Fig-3 style deployment):
//   POST /api/{entry}   flat JSON object of string params -> decision
//   POST /admin/reload  {"sources": [...]} or re-read configured files
//   GET  /health
class GuardHttpServer {
 public:
  GuardHttpServer(GuardCore& core, std::string host, int port,
                  std::string shared_secret = "",
                  std::vector<std::string> script_files = {});
  ~GuardHttpServer();

  int start();  // returns bound port
  void stop();

  // Structured request log: one JSON line per /api call (entry, params
  // hash, decision, latency, prover steps). Credentials are never logged.
  void set_request_log(std::ostream* log) { log_ = log; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  GuardCore& core_;
  std::string host_;
  int port_;
  std::string secret_;
  std::vector<std::string> script_files_;
  std::thread thread_;
  std::ostream* log_ = nullptr;
  std::mutex log_mu_;
};

std::string read_file_or_throw(const std::string& path);

}  // namespace safe::guard
