#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "coilpilot/config.hpp"

namespace coilpilot {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;          // 0 picks a free port
  double duration_s = 0.0;  // simulated seconds before shutting down; 0 runs until stopped
  std::string out_dir;      // telemetry.csv, commands.ndjson and summary.json when set
};

// Single-client session server. The network thread owns the sockets and the
// stepper thread owns the Session; they only exchange message strings through
// queues. Frames are newline-delimited JSON, or WebSocket text frames when the
// client opens with an HTTP upgrade.
//
// With session.time_scale = 0 the clock is free-running: it starts once the
// client has finished sending (end of its input stream) and then runs as fast
// as possible to duration_s.
class SessionServer {
 public:
  SessionServer(const Config& cfg, ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and listens; returns the bound port.
  int start();
  // Blocks until the duration elapses or stop() is called.
  void run();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Base64 SHA-1 of key + the RFC 6455 GUID.
std::string websocket_accept_key(const std::string& client_key);

}  // namespace coilpilot
