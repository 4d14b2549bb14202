#pragma once

#include <memory>
#include <string>

#include "tabi/hub.hpp"

namespace tabi {

/// HTTP + WebSocket front end for a SessionHub.
///
///   GET  /health
///   POST /sessions
///   GET  /sessions/{id}
///   POST /sessions/{id}/utterances   {"text": "..."}  -> 202
///   WS   /sessions/{id}/stream[?after=N]
class Server {
 public:
  Server(SessionHub& hub, std::string address, unsigned short port, int io_threads = 2);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the io threads. Port 0 picks an ephemeral port.
  void start();
  void stop();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tabi
