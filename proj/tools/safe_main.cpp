// safe: command-line front end for keys, certificates, trust scripts, and
// the application demos.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "safe/apps/apps.hpp"
#include "safe/guard/service.hpp"
#include "safe/store/http.hpp"
#include "safe/store/safestore.hpp"

#ifndef SAFE_DEFAULT_SCRIPTS_DIR
#define SAFE_DEFAULT_SCRIPTS_DIR "scripts"
#endif

namespace {

using namespace safe;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct StoreHandle {
  std::unique_ptr<store::SafeStore> local;
  std::unique_ptr<store::HttpStoreClient> remote;
  store::StoreClient& client() { return remote ? *(store::StoreClient*)remote.get() : *local; }
};

StoreHandle open_store(const std::string& url) {
  StoreHandle h;
  if (url.empty()) {
    h.local = std::make_unique<store::SafeStore>(
        store::make_memory_backend(), store::SafeStoreConfig{},
        [] { return wall_ms(); });
  } else {
    h.remote = std::make_unique<store::HttpStoreClient>(url);
    if (!h.remote->health())
      throw std::runtime_error("store not reachable: " + url);
  }
  return h;
}

cert::Certificate load_cert(const std::string& path) {
  std::string text = slurp(path);
  if (text.find("-----BEGIN SAFE CERTIFICATE-----") != std::string::npos)
    return cert::dearmor_certificate(text);
  return cert::decode_certificate(text);
}

int cmd_run(const std::string& script, const std::string& entry,
            const std::vector<std::string>& args, const std::string& key_file,
            const std::string& store_url,
            const std::vector<std::string>& env_kv) {
  auto key = cert::decode_keypair(slurp(key_file));
  auto handle = open_store(store_url);
  auto clock = cache::system_clock();
  cache::ContextService contexts(handle.client(), clock, {});
  slang::Interpreter interp(handle.client(), contexts, clock,
                            cert::random_guid_source(), {});
  std::set<std::string> extra_env;
  slang::Env env;
  env.key = &key;
  for (const auto& kv : env_kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--env expects NAME=VALUE: " + kv);
    extra_env.insert(kv.substr(0, eq));
    env.bind(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto module = slang::load_script(slurp(script), extra_env);

  if (module.defcons.count(entry)) {
    auto r = interp.invoke_defcon(module, entry, args, env);
    std::cout << "token: " << r.token.text() << "\n"
              << "label: " << r.certificate.set.label << "\n"
              << "posted: " << (r.posted ? "yes" : "no") << "\n";
    if (!r.posted) std::cout << cert::armor_certificate(r.certificate);
    return 0;
  }
  if (module.defguards.count(entry)) {
    auto r = interp.invoke_defguard(module, entry, args, env);
    std::cout << "allowed: " << (r.allowed ? "true" : "false") << "\n";
    for (const auto& a : r.bindings)
      for (const auto& [var, term] : a.bindings)
        std::cout << "  ?" << var << " = " << term.canonical() << "\n";
    std::cout << "steps: " << r.diagnostics.prover_steps
              << ", context statements: " << r.diagnostics.statement_count
              << ", refreshes: " << r.diagnostics.refresh_attempts << "\n";
    if (!r.diagnostics.error.empty())
      std::cout << "error: " << r.diagnostics.error << "\n";
    return r.allowed ? 0 : 3;
  }
  std::cerr << "no defcon or defguard named '" << entry << "'\n";
  return 2;
}

int cmd_strong_demo(const std::string& scripts_dir,
                    const std::string& store_url) {
  auto handle = open_store(store_url);
  auto clock = cache::system_clock();
  apps::AppHarness h(handle.client(), clock, scripts_dir,
                     static_cast<uint64_t>(wall_ms()));
  apps::StrongDriver strong(h, apps::LinkMode::Direct);
  auto& owner = h.make_principal("owner");
  auto& alice = h.make_principal("alice");
  auto& bob = h.make_principal("bob");
  auto& svc = h.make_principal("service");
  std::cout << "owner:  " << owner.id.text() << "\n"
            << "alice:  " << alice.id.text() << "\n"
            << "bob:    " << bob.id.text() << "\n";
  auto obj = strong.create_object(owner);
  std::cout << "object: " << obj.text() << "\n";
  auto d1 = strong.delegate_capability(owner, alice, obj, "read", true);
  std::cout << "owner -> alice (read, delegatable): " << d1.text() << "\n";
  auto d2 = strong.delegate_capability(alice, bob, obj, "read", false);
  std::cout << "alice -> bob  (read, final):        " << d2.text() << "\n";
  auto show = [&](const char* who, const apps::Principal& p,
                  const char* priv) {
    auto r = strong.access(svc, p, obj, priv);
    std::cout << "access " << who << " " << priv << ": "
              << (r.allowed ? "allow" : "deny") << " (steps "
              << r.diagnostics.prover_steps << ", stmts "
              << r.diagnostics.statement_count << ")\n";
  };
  show("alice", alice, "read");
  show("bob", bob, "read");
  show("bob", bob, "write");
  return 0;
}

int cmd_routing_demo(const std::string& scripts_dir,
                     const std::string& store_url) {
  auto handle = open_store(store_url);
  auto clock = cache::system_clock();
  apps::AppHarness h(handle.client(), clock, scripts_dir,
                     static_cast<uint64_t>(wall_ms()));
  apps::RoutingDriver routing(h);
  auto& anchor = routing.make_as("anchor");
  auto& a = routing.make_as("as-a");
  auto& b = routing.make_as("as-b");
  auto& c = routing.make_as("as-c");
  routing.allocate(anchor, "10.0.0.0/8", a);
  routing.allocate(a, "10.1.0.0/16", b);
  auto adv0 = routing.advertise_origin(b, "10.1.0.0/16", anchor);
  auto adv1 = routing.advertise_hop(c, "10.1.0.0/16", adv0);
  std::cout << "origin advertisement: " << adv0.text() << "\n"
            << "hop advertisement:    " << adv1.text() << "\n";
  std::cout << "validate origin: "
            << (routing.validate(anchor, adv0).allowed ? "allow" : "deny")
            << "\n";
  std::cout << "validate hop:    "
            << (routing.validate(anchor, adv1).allowed ? "allow" : "deny")
            << "\n";
  auto bad = routing.advertise_origin_unowned(b, "11.0.0.0/8", anchor);
  std::cout << "validate unowned-prefix origin: "
            << (routing.validate(anchor, bad).allowed ? "allow" : "deny")
            << "\n";
  return 0;
}

int cmd_attest_demo(const std::string& scripts_dir,
                    const std::string& store_url) {
  auto handle = open_store(store_url);
  auto clock = cache::system_clock();
  apps::AppHarness h(handle.client(), clock, scripts_dir,
                     static_cast<uint64_t>(wall_ms()));
  apps::AttestDriver attest(h);
  auto& cloud = h.make_principal("cloud");
  auto& certifier = h.make_principal("certifier");
  auto& owner = h.make_principal("owner");
  auto& svc = h.make_principal("service");
  auto& client = h.make_principal("client");
  attest.endorse_image(certifier, "webserver", {"audited", "sandboxed"});
  auto bearer = attest.attest(cloud, client, "webserver", certifier);
  auto obj = attest.make_object(owner, cloud, certifier,
                                {"sandboxed", "measured"});
  auto r = attest.check_access(svc, client, obj, bearer);
  std::cout << "object: " << obj.text() << "\n"
            << "attested access: " << (r.allowed ? "allow" : "deny") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safe: logical trust toolkit"};
  app.require_subcommand(1);

  // keygen
  auto* keygen = app.add_subcommand("keygen", "generate a signing keypair");
  std::string out_path = "self.safekey";
  std::string scheme = "ed25519";
  keygen->add_option("--out", out_path, "key file path");
  keygen->add_option("--scheme", scheme, "signature scheme id");

  // id
  auto* id = app.add_subcommand("id", "print a key's principalID");
  std::string id_key;
  id->add_option("--key", id_key, "key file")->required();

  // run
  auto* run = app.add_subcommand("run", "invoke a script entry point");
  std::string run_script, run_entry, run_key, run_store;
  std::vector<std::string> run_args, run_env;
  run->add_option("script", run_script, "script file")->required();
  run->add_option("entry", run_entry, "defcon/defguard name")->required();
  run->add_option("args", run_args, "entry arguments");
  run->add_option("--key", run_key, "signing key file")->required();
  run->add_option("--store", run_store, "certificate store URL");
  run->add_option("--env", run_env, "env binding NAME=VALUE (repeatable)");

  // cert
  auto* cert_cmd = app.add_subcommand("cert", "inspect certificates");
  cert_cmd->require_subcommand(1);
  auto* cert_show = cert_cmd->add_subcommand("show", "decode and print");
  auto* cert_verify = cert_cmd->add_subcommand("verify", "verify signature");
  std::string cert_path;
  cert_show->add_option("file", cert_path, "certificate file")->required();
  std::string verify_path;
  cert_verify->add_option("file", verify_path, "certificate file")->required();

  // demos
  std::string scripts_dir = SAFE_DEFAULT_SCRIPTS_DIR;
  std::string demo_store;
  app.add_option("--scripts-dir", scripts_dir, "script package directory");
  auto* strong_demo =
      app.add_subcommand("strong-demo", "capability delegation walkthrough");
  strong_demo->add_option("--store", demo_store, "certificate store URL");
  auto* routing_demo =
      app.add_subcommand("routing-demo", "prefix delegation walkthrough");
  routing_demo->add_option("--store", demo_store, "certificate store URL");
  auto* attest_demo =
      app.add_subcommand("attest-demo", "attestation walkthrough");
  attest_demo->add_option("--store", demo_store, "certificate store URL");

  CLI11_PARSE(app, argc, argv);

  try {
    if (keygen->parsed()) {
      auto kp = cert::generate_keypair(scheme);
      std::ofstream out(out_path, std::ios::binary);
      out << cert::encode_keypair(kp);
      std::cout << cert::principal_id(kp).text() << "\n";
      return 0;
    }
    if (id->parsed()) {
      auto kp = cert::decode_keypair(slurp(id_key));
      std::cout << cert::principal_id(kp).text() << "\n";
      return 0;
    }
    if (run->parsed())
      return cmd_run(run_script, run_entry, run_args, run_key, run_store,
                     run_env);
    if (cert_show->parsed()) {
      auto c = load_cert(cert_path);
      std::cout << c.payload();
      std::cout << "token: " << c.token().text() << "\n";
      return 0;
    }
    if (cert_verify->parsed()) {
      auto c = load_cert(verify_path);
      auto v = cert::verify_certificate(c, wall_ms());
      std::cout << "valid: token " << v.token.text() << ", issuer "
                << v.set.issuer.text() << ", " << v.statement_count()
                << " statements\n";
      return 0;
    }
    if (strong_demo->parsed()) return cmd_strong_demo(scripts_dir, demo_store);
    if (routing_demo->parsed())
      return cmd_routing_demo(scripts_dir, demo_store);
    if (attest_demo->parsed()) return cmd_attest_demo(scripts_dir, demo_store);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
