// safestore: the certificate store service.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "safe/store/http.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safestore: write-checked certificate store"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "run the store service");
  std::string listen = "127.0.0.1:7465";
  std::string data_dir;
  size_t max_payload = 1 << 20;
  int64_t sweep_interval_s = 60;
  serve->add_option("--listen", listen, "host:port to bind");
  serve->add_option("--data-dir", data_dir,
                    "persist records under this directory (default: memory)");
  serve->add_option("--max-payload", max_payload,
                    "largest accepted certificate in bytes");
  serve->add_option("--sweep-interval", sweep_interval_s,
                    "seconds between expired-record sweeps (0 = never)");

  CLI11_PARSE(app, argc, argv);

  auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--listen must be host:port\n";
    return 2;
  }
  std::string host = listen.substr(0, colon);
  int port = std::stoi(listen.substr(colon + 1));

  try {
    auto backend = data_dir.empty()
                       ? safe::store::make_memory_backend()
                       : safe::store::make_file_backend(data_dir + "/safestore.log");
    safe::store::SafeStoreConfig cfg;
    cfg.max_payload_bytes = max_payload;
    auto clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
    safe::store::SafeStore store(std::move(backend), cfg, clock);
    safe::store::StoreHttpServer server(store, host, port);
    int bound = server.start();
    std::cerr << "safestore listening on " << host << ":" << bound
              << (data_dir.empty() ? " (memory)" : " (log: " + data_dir + ")")
              << "\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    int64_t since_sweep = 0;
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      since_sweep += 200;
      if (sweep_interval_s > 0 && since_sweep >= sweep_interval_s * 1000) {
        size_t n = store.sweep_expired();
        if (n) std::cerr << "swept " << n << " expired records\n";
        since_sweep = 0;
      }
    }
    server.stop();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
