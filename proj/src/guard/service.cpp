#include "safe/guard/service.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <sstream>

namespace safe::guard {

using nlohmann::json;

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GuardCore::GuardCore(cert::KeyPair key, store::StoreClient& store,
                     std::shared_ptr<cache::Clock> clock, ServiceConfig config)
    : key_(std::move(key)),
      self_(cert::principal_id(key_)),
      config_(std::move(config)),
      contexts_(store, clock, config_.cache),
      interp_(store, contexts_, clock, cert::random_guid_source(),
              config_.interp) {
  if (!config_.script_files.empty()) {
    std::vector<std::string> sources;
    for (const auto& f : config_.script_files)
      sources.push_back(read_file_or_throw(f));
    load_scripts(sources);
  } else {
    module_ = std::make_shared<const slang::ScriptModule>();
  }
}

void GuardCore::load_scripts(const std::vector<std::string>& sources) {
  // Scripts concatenate into one module; duplicate names across files are
  // load errors like duplicates within one file.
  std::string all;
  for (const auto& s : sources) {
    all += s;
    all += '\n';
  }
  auto module = std::make_shared<const slang::ScriptModule>(
      slang::load_script(all, config_.extra_env));
  std::lock_guard lk(module_mu_);
  module_ = std::move(module);
}

bool GuardCore::reload_scripts(const std::vector<std::string>& sources,
                               std::string* error) {
  try {
    load_scripts(sources);
    return true;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return false;
  }
}

std::shared_ptr<const slang::ScriptModule> GuardCore::module() {
  std::lock_guard lk(module_mu_);
  return module_;
}

slang::GuardResult GuardCore::invoke(const std::string& entry,
                                     const std::vector<std::string>& args,
                                     slang::Env env) {
  auto mod = module();
  env.key = &key_;
  return interp_.invoke_defguard(*mod, entry, args, std::move(env));
}

GuardCore::Response GuardCore::handle(const std::string& entry,
                                      const json& params) {
  Response res;
  auto mod = module();  // snapshot: in-flight requests keep one module
  auto it = mod->defguards.find(entry);
  if (it == mod->defguards.end()) {
    res.found = false;
    res.status = 404;
    res.body = json{{"error", "unknown-entry"}, {"entry", entry}};
    return res;
  }
  res.found = true;

  slang::Env env;
  std::map<std::string, std::string> named;
  if (!params.is_object() && !params.is_null()) {
    res.status = 400;
    res.body = json{{"error", "bad-request"},
                    {"message", "body must be a JSON object of strings"}};
    return res;
  }
  if (params.is_object()) {
    for (auto& [k, v] : params.items()) {
      if (!v.is_string()) {
        res.status = 400;
        res.body = json{{"error", "bad-request"},
                        {"message", "parameter '" + k + "' is not a string"}};
        return res;
      }
      if (!k.empty() && k[0] == '$') {
        env.bind(k.substr(1), v.get<std::string>());
      } else {
        named[k] = v.get<std::string>();
      }
    }
  }
  std::vector<std::string> args;
  for (const auto& p : it->second.params) {
    auto found = named.find(p);
    if (found == named.end()) {
      res.status = 400;
      res.body = json{{"error", "missing-parameter"}, {"parameter", p}};
      return res;
    }
    args.push_back(found->second);
    named.erase(found);
  }
  if (!named.empty()) {
    res.status = 400;
    res.body = json{{"error", "unknown-parameter"},
                    {"parameter", named.begin()->first}};
    return res;
  }

  auto t0 = std::chrono::steady_clock::now();
  slang::GuardResult gr;
  try {
    gr = interp_.invoke_defguard(*mod, entry, args, [&] {
      slang::Env e = env;
      e.key = &key_;
      return e;
    }());
  } catch (const std::exception& e) {
    // Fail closed: evaluation errors are denials with diagnostics.
    gr.allowed = false;
    gr.diagnostics.error = e.what();
  }
  auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();

  json bindings = json::array();
  for (const auto& a : gr.bindings) {
    json b = json::object();
    for (const auto& [var, term] : a.bindings) b[var] = term.canonical();
    bindings.push_back(b);
  }
  json members = json::array();
  for (const auto& t : gr.diagnostics.context_members)
    members.push_back(t.text());
  res.status = 200;
  res.body = json{
      {"allowed", gr.allowed},
      {"bindings", bindings},
      {"diagnostics",
       json{{"context_roots", gr.diagnostics.context_roots.size()},
            {"context_members", members},
            {"statement_count", gr.diagnostics.statement_count},
            {"prover_steps", gr.diagnostics.prover_steps},
            {"refresh_attempts", gr.diagnostics.refresh_attempts},
            {"stop_reason", gr.diagnostics.stop_reason},
            {"latency_us", us}}},
  };
  if (!gr.diagnostics.error.empty())
    res.body["error"] = gr.diagnostics.error;
  return res;
}

struct GuardHttpServer::Impl {
  httplib::Server srv;
};

GuardHttpServer::GuardHttpServer(GuardCore& core, std::string host, int port,
                                 std::string shared_secret,
                                 std::vector<std::string> script_files)
    : impl_(std::make_unique<Impl>()),
      core_(core),
      host_(std::move(host)),
      port_(port),
      secret_(std::move(shared_secret)),
      script_files_(std::move(script_files)) {
  auto& srv = impl_->srv;

  auto authed = [this](const httplib::Request& req, httplib::Response& res) {
    if (secret_.empty()) return true;
    if (req.get_header_value("X-Safe-Guard-Key") == secret_) return true;
    res.status = 401;
    res.set_content(json{{"error", "unauthorized"}}.dump(), "application/json");
    return false;
  };

  srv.Post(R"(/api/([A-Za-z0-9_]+))",
           [this, authed](const httplib::Request& req, httplib::Response& res) {
             if (!authed(req, res)) return;
             json params = json::object();
             if (!req.body.empty()) {
               params = json::parse(req.body, nullptr, false);
               if (params.is_discarded()) {
                 res.status = 400;
                 res.set_content(json{{"error", "bad-json"}}.dump(),
                                 "application/json");
                 return;
               }
             }
             GuardCore::Response out =
                 core_.handle(req.matches[1].str(), params);
             res.status = out.status;
             res.set_content(out.body.dump(), "application/json");
             if (log_ && out.found && out.status == 200) {
               json line{
                   {"entry", req.matches[1].str()},
                   {"params_sha256", cert::sha256(params.dump()).text()},
                   {"allowed", out.body.value("allowed", false)},
                   {"latency_us",
                    out.body["diagnostics"].value("latency_us", 0)},
                   {"prover_steps",
                    out.body["diagnostics"].value("prover_steps", 0)},
                   {"refresh_attempts",
                    out.body["diagnostics"].value("refresh_attempts", 0)}};
               std::lock_guard lk(log_mu_);
               (*log_) << line.dump() << "\n";
             }
           });

  srv.Post("/admin/reload", [this, authed](const httplib::Request& req,
                                           httplib::Response& res) {
    if (!authed(req, res)) return;
    std::vector<std::string> sources;
    if (!req.body.empty()) {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_object() && body.contains("sources")) {
        for (const auto& s : body["sources"]) sources.push_back(s.get<std::string>());
      }
    }
    if (sources.empty()) {
      try {
        for (const auto& f : script_files_)
          sources.push_back(read_file_or_throw(f));
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        return;
      }
    }
    std::string error;
    if (core_.reload_scripts(sources, &error)) {
      res.set_content(json{{"reloaded", true}}.dump(), "application/json");
    } else {
      res.status = 422;
      res.set_content(json{{"reloaded", false}, {"error", error}}.dump(),
                      "application/json");
    }
  });

  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(
        json{{"status", "ok"}, {"principal", core_.self().text()}}.dump(),
        "application/json");
  });
}

GuardHttpServer::~GuardHttpServer() { stop(); }

int GuardHttpServer::start() {
  auto& srv = impl_->srv;
  if (port_ == 0) {
    port_ = srv.bind_to_any_port(host_);
  } else if (!srv.bind_to_port(host_, port_)) {
    throw std::runtime_error("cannot bind " + host_ + ":" +
                             std::to_string(port_));
  }
  thread_ = std::thread([this] { impl_->srv.listen_after_bind(); });
  impl_->srv.wait_until_ready();
  return port_;
}

void GuardHttpServer::stop() {
  if (thread_.joinable()) {
    impl_->srv.stop();
    thread_.join();
  }
}

}  // namespace safe::guard
