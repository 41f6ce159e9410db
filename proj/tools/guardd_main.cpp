// guardd: a long-running guard service holding a principal's signing key
// and loaded trust scripts, exposing script entry points over REST.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "safe/guard/service.hpp"
#include "safe/store/http.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guardd: trust-script guard service"};

  std::string listen = env_or("GUARDD_LISTEN", "127.0.0.1:7466");
  std::string key_file = env_or("GUARDD_KEY", "");
  std::vector<std::string> scripts;
  std::string store_url = env_or("GUARDD_STORE", "");
  std::string secret = env_or("GUARDD_SECRET", "");
  int64_t timeout_ms = 10'000;
  int64_t throttle_ms = 1000;
  bool log_requests = false;

  app.add_option("--listen", listen, "host:port to bind");
  app.add_option("--key", key_file, "signing key file ($Self)")->required();
  app.add_option("--script", scripts, "trust script file (repeatable)")
      ->required();
  app.add_option("--store", store_url, "certificate store URL")->required();
  app.add_option("--secret", secret, "shared secret for request authn");
  app.add_option("--timeout-ms", timeout_ms, "per-request prover deadline");
  app.add_option("--throttle-ms", throttle_ms, "context refresh throttle");
  app.add_flag("--log-requests", log_requests,
               "emit one JSON log line per request to stderr");

  CLI11_PARSE(app, argc, argv);

  auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--listen must be host:port\n";
    return 2;
  }

  try {
    auto key = safe::cert::decode_keypair(
        safe::guard::read_file_or_throw(key_file));
    safe::store::HttpStoreClient store(store_url);
    if (!store.health()) {
      std::cerr << "store at " << store_url << " is not healthy\n";
      return 1;
    }
    safe::guard::ServiceConfig cfg;
    cfg.script_files = scripts;
    cfg.shared_secret = secret;
    cfg.cache.throttle_ms = throttle_ms;
    cfg.interp.guard_limits.deadline_ms = timeout_ms;

    auto clock = safe::cache::system_clock();
    safe::guard::GuardCore core(key, store, clock, cfg);
    safe::guard::GuardHttpServer server(core, listen.substr(0, colon),
                                        std::stoi(listen.substr(colon + 1)),
                                        secret, scripts);
    if (log_requests) server.set_request_log(&std::cerr);
    int port = server.start();
    std::cerr << "guardd " << core.self().text() << " listening on "
              << listen.substr(0, colon) << ":" << port << "\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop)
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.stop();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
