#pragma once

// Live session service: newline-delimited JSON over TCP on localhost. One
// loop owns the simulation, steps it at a fixed rate and broadcasts a state
// snapshot to every client each tick. The oldest connected client controls
// the session; later clients only observe.
//
// Client -> server kinds: hello, set_closure {angle}, inject {type, finger,
// magnitude, duration}, load_scenario {path | scenario}, reset.
// Server -> client kinds: state, error.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "softhand/scenario.hpp"

namespace softhand::harness {

class Simulation;

// Protocol core without sockets.
class Session {
 public:
  explicit Session(Scenario scenario);
  ~Session();

  struct Reply {
    std::optional<std::string> immediate;  // sent right away (state for hello, or error)
    std::optional<std::string> ack;        // command kind acknowledged in the next state
  };

  Reply handle(const std::string& line, bool authoritative);
  void tick();
  std::string state_message(bool authoritative, const std::optional<std::string>& ack, bool with_config) const;

  const Simulation& simulation() const { return *sim_; }
  double tick_period() const { return scenario_.dt; }

 private:
  Scenario scenario_;
  std::unique_ptr<Simulation> sim_;
};

struct ServeOptions {
  int port = 0;  // 0 picks a free port
  double tick_hz = 50.0;
};

class SessionServer {
 public:
  // Binds 127.0.0.1. Throws std::runtime_error on bind failure.
  SessionServer(Scenario scenario, ServeOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  int port() const { return port_; }
  // Serves until `stop` becomes true.
  void run(const std::atomic<bool>& stop);

 private:
  struct Client;

  Session session_;
  ServeOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
};

}  // namespace softhand::harness
