#include "softhand/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "json.hpp"
#include "softhand/simulation.hpp"

namespace softhand::harness {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLine = 1 << 20;
constexpr std::size_t kMaxBacklog = 4 << 20;

double rounded(double v, double scale) { return std::round(v * scale) / scale; }

json error_json(const std::string& message) { return {{"kind", "error"}, {"message", message}}; }

Disturbance disturbance_from(const json& j, const Scenario& scenario) {
  Disturbance d;
  d.type = disturbance_type_from_string(j.at("type").get<std::string>());
  switch (d.type) {
    case DisturbanceType::indenter_move: d.magnitude = 0.5; break;
    case DisturbanceType::object_force: d.magnitude = 12.0; break;
    case DisturbanceType::induced_slip:
      d.magnitude = 6.0;
      d.duration = 0.1;
      break;
  }
  d.finger = scenario.control.focus_finger;
  d.magnitude = j.value("magnitude", d.magnitude);
  d.duration = j.value("duration", d.duration);
  if (j.contains("finger")) {
    const auto& f = j["finger"];
    if (f.is_number_integer()) {
      d.finger = f.get<int>();
    } else {
      const auto name = f.get<std::string>();
      d.finger = -1;
      for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
        if (hand::finger_name(i) == name) d.finger = static_cast<int>(i);
      }
      if (d.finger < 0) throw std::invalid_argument("unknown finger '" + name + "'");
    }
  }
  if (!std::isfinite(d.magnitude) || !(d.duration >= 0.0)) throw std::invalid_argument("bad disturbance values");
  return d;
}

}  // namespace

Session::Session(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.control.mode = scenario_.control.mode == ControlMode::profile ? ControlMode::teleop : scenario_.control.mode;
  scenario_.control.live = true;
  sim_ = std::make_unique<Simulation>(scenario_);
}

Session::~Session() = default;

Session::Reply Session::handle(const std::string& line, bool authoritative) {
  Reply reply;
  try {
    const json msg = json::parse(line);
    if (!msg.is_object() || !msg.contains("kind") || !msg["kind"].is_string()) {
      throw std::invalid_argument("message needs a string 'kind'");
    }
    const std::string kind = msg["kind"].get<std::string>();
    if (kind == "hello") {
      reply.immediate = state_message(authoritative, std::string("hello"), true);
      return reply;
    }
    if (kind != "set_closure" && kind != "inject" && kind != "load_scenario" && kind != "reset") {
      throw std::invalid_argument("unknown message kind '" + kind + "'");
    }
    if (!authoritative) throw std::invalid_argument("observer clients are read-only");
    if (kind == "set_closure") {
      if (!msg.contains("angle") || !msg["angle"].is_number()) throw std::invalid_argument("set_closure needs a numeric angle");
      sim_->set_closure(msg["angle"].get<double>());
    } else if (kind == "inject") {
      sim_->inject(disturbance_from(msg, scenario_));
    } else if (kind == "load_scenario") {
      Scenario next;
      if (msg.contains("scenario")) {
        next = parse_scenario(msg["scenario"].dump());
      } else if (msg.contains("path")) {
        next = load_scenario(msg["path"].get<std::string>());
      } else {
        throw std::invalid_argument("load_scenario needs 'path' or 'scenario'");
      }
      Session fresh(std::move(next));
      scenario_ = std::move(fresh.scenario_);
      sim_ = std::move(fresh.sim_);
      reply.immediate = state_message(authoritative, kind, true);
      return reply;
    } else {
      sim_ = std::make_unique<Simulation>(scenario_);
    }
    reply.ack = kind;
  } catch (const json::exception& e) {
    reply.immediate = error_json(std::string("malformed message: ") + e.what()).dump();
  } catch (const std::exception& e) {
    reply.immediate = error_json(e.what()).dump();
  }
  return reply;
}

void Session::tick() { sim_->step(); }

std::string Session::state_message(bool authoritative, const std::optional<std::string>& ack, bool with_config) const {
  const TickRecord& r = sim_->record();
  json joints = json::array();
  for (const auto& j : r.joints) joints.push_back({j.theta[0], j.theta[1], j.theta[2]});
  json fingers = json::array();
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    const auto& s = r.sensing[i];
    fingers.push_back({{"name", std::string(hand::finger_name(i))},
                       {"touching", s.touching},
                       {"contact", s.is_contact},
                       {"center", {s.center.x, s.center.y}},
                       {"deformation", s.deformation},
                       {"force", s.force},
                       {"slip", s.is_slip}});
  }
  const int focus = scenario_.control.focus_finger;
  const auto& density = sim_->analysis(focus).density;
  const auto& base = sim_->baseline().density;
  json values = json::array();
  for (std::size_t k = 0; k < density.values.size(); ++k) {
    values.push_back(base.values[k] > 0.0 ? rounded(density.values[k] / base.values[k], 1000.0) : 0.0);
  }
  json msg{{"kind", "state"},
           {"tick", r.tick},
           {"t", r.time},
           {"role", authoritative ? "controller" : "observer"},
           {"control", std::string(to_string(scenario_.control.mode))},
           {"mode", r.mode},
           {"closure", r.gesture},
           {"setpoints", {r.setpoints.agonist, r.setpoints.antagonist}},
           {"encoders", {r.agonist_encoder, r.antagonist_encoder}},
           {"joints", joints},
           {"fingers", fingers},
           {"fingertip_contacts", r.fingertip_contacts},
           {"object_shift", r.object_shift},
           {"heatmap",
            {{"finger", std::string(hand::finger_name(focus))},
             {"x0", density.spec.x0},
             {"y0", density.spec.y0},
             {"step", density.spec.step},
             {"nx", density.spec.nx},
             {"ny", density.spec.ny},
             {"center", {r.sensing[focus].center.x, r.sensing[focus].center.y}},
             {"values", values}}}};
  if (ack) msg["ack"] = *ack;
  if (with_config) msg["config"] = json::parse(scenario_to_json(scenario_));
  return msg.dump();
}

struct SessionServer::Client {
  int fd = -1;
  std::string in;
  std::string out;
  std::optional<std::string> ack;
  bool closed = false;
};

SessionServer::SessionServer(Scenario scenario, ServeOptions options)
    : session_(std::move(scenario)), options_(options) {
  if (!(options_.tick_hz > 0.0)) throw std::invalid_argument("tick rate must be positive");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 8) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot bind port " + std::to_string(options_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  ::fcntl(listen_fd_, F_SETFL, O_NONBLOCK);
}

SessionServer::~SessionServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void SessionServer::run(const std::atomic<bool>& stop) {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / options_.tick_hz));
  std::vector<Client> clients;
  auto next_tick = clock::now() + period;

  const auto queue = [](Client& c, const std::string& msg) {
    // Stale snapshots are dropped for clients that stop reading.
    if (c.out.size() < kMaxBacklog) c.out += msg + '\n';
  };

  while (!stop.load()) {
    std::vector<pollfd> fds;
    fds.push_back({listen_fd_, POLLIN, 0});
    for (const auto& c : clients) fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - clock::now()).count();
    ::poll(fds.data(), fds.size(), static_cast<int>(std::clamp<long long>(wait, 0, 100)));

    if (fds[0].revents & POLLIN) {
      while (true) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        ::fcntl(fd, F_SETFL, O_NONBLOCK);
        clients.push_back({fd, {}, {}, {}, false});
      }
    }
    for (std::size_t k = 0; k + 1 < fds.size() && k < clients.size(); ++k) {
      Client& c = clients[k];
      if (fds[k + 1].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[4096];
        while (true) {
          const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
          if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            continue;
          }
          if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) c.closed = true;
          break;
        }
        std::size_t pos;
        while ((pos = c.in.find('\n')) != std::string::npos) {
          std::string line = c.in.substr(0, pos);
          c.in.erase(0, pos + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.empty()) continue;
          const auto reply = session_.handle(line, k == 0);
          if (reply.immediate) queue(c, *reply.immediate);
          if (reply.ack) c.ack = reply.ack;
        }
        if (c.in.size() > kMaxLine) {
          queue(c, error_json("line too long").dump());
          c.in.clear();
        }
      }
    }

    if (clock::now() >= next_tick) {
      session_.tick();
      next_tick += period;
      if (clock::now() > next_tick + 10 * period) next_tick = clock::now() + period;
      for (std::size_t k = 0; k < clients.size(); ++k) {
        queue(clients[k], session_.state_message(k == 0, clients[k].ack, false));
        clients[k].ack.reset();
      }
    }

    for (auto& c : clients) {
      while (!c.out.empty() && !c.closed) {
        const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n > 0) {
          c.out.erase(0, static_cast<std::size_t>(n));
        } else {
          if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) c.closed = true;
          break;
        }
      }
    }
    for (auto& c : clients) {
      if (c.closed) ::close(c.fd);
    }
    std::erase_if(clients, [](const Client& c) { return c.closed; });
  }
  for (auto& c : clients) ::close(c.fd);
}

}  // namespace softhand::harness
