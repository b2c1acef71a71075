#pragma once

#include <memory>
#include <string>

#include "velopad/session.hpp"

namespace velopad {

/// WebSocket session service. Every connection owns one PadSession seeded
/// from the base configuration; client messages are applied in arrival order
/// and captures are pushed every capture period (frame period * n).
class SessionServer {
 public:
  /// Binds immediately; throws std::system_error when the address is unusable.
  /// Port 0 picks a free port.
  SessionServer(SessionConfig base, const std::string& host, unsigned short port);
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  unsigned short port() const;

  /// Serves until stop() is called. Uses `threads` I/O threads plus a small
  /// pool for simulation work. With `handle_signals`, SIGINT/SIGTERM stop it.
  void run(unsigned threads = 2, bool handle_signals = false);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace velopad
