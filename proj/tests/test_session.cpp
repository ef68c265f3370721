#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <stdexcept>
#include <string>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "softhand/controller.hpp"
#include "softhand/session.hpp"
#include "softhand/simulation.hpp"

using namespace softhand;
using namespace softhand::harness;
using nlohmann::json;

namespace {

Scenario live_scenario() {
  Scenario s;
  s.duration = 3600.0;
  s.control.live = true;
  for (auto& o : s.objects.per_finger) o = Circle{{-52.95, 56.82}, 12.0};
  return s;
}

class Client {
 public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) throw std::runtime_error("connect");
    timeval tv{10, 0};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  }
  ~Client() { ::close(fd_); }

  void send(const json& msg) { send_raw(msg.dump() + "\n"); }
  void send_raw(const std::string& text) { ::send(fd_, text.data(), text.size(), MSG_NOSIGNAL); }

  json next() {
    std::size_t pos;
    while ((pos = buffer_.find('\n')) == std::string::npos) {
      char buf[65536];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) throw std::runtime_error("connection closed or timed out");
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
    const std::string line = buffer_.substr(0, pos);
    buffer_.erase(0, pos + 1);
    return json::parse(line);
  }

  // Next message of the given kind, optionally carrying `ack`.
  json until(const std::string& kind, const std::string& ack = "") {
    for (int i = 0; i < 2000; ++i) {
      json m = next();
      if (m["kind"] == kind && (ack.empty() || m.value("ack", std::string()) == ack)) return m;
    }
    throw std::runtime_error("expected message never arrived");
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace

TEST_CASE("session core handles commands") {
  Session session(live_scenario());
  const auto hello = session.handle(R"({"kind": "hello"})", true);
  REQUIRE(hello.immediate);
  const json state = json::parse(*hello.immediate);
  CHECK(state["kind"] == "state");
  CHECK(state.contains("config"));
  CHECK(state["heatmap"]["values"].size() == 61 * 61);

  CHECK(json::parse(*session.handle("not json", true).immediate)["kind"] == "error");
  CHECK(json::parse(*session.handle(R"({"kind": "dance"})", true).immediate)["kind"] == "error");
  CHECK(json::parse(*session.handle(R"({"kind": "set_closure", "angle": "wide"})", true).immediate)["kind"] == "error");
  CHECK(json::parse(*session.handle(R"({"kind": "set_closure", "angle": 90})", false).immediate)["kind"] == "error");
  CHECK(json::parse(*session.handle(R"({"kind": "inject", "type": "earthquake"})", true).immediate)["kind"] == "error");

  const auto ok = session.handle(R"({"kind": "set_closure", "angle": 90})", true);
  CHECK_FALSE(ok.immediate);
  CHECK(*ok.ack == "set_closure");
  session.tick();
  CHECK(session.simulation().record().setpoints == control::map_gesture(90.0));

  session.handle(R"({"kind": "reset"})", true);
  CHECK(session.simulation().tick() == 0);
}

TEST_CASE("live session over tcp") {
  SessionServer server(live_scenario(), {0, 200.0});
  std::atomic<bool> stop{false};
  std::thread loop([&] { server.run(stop); });

  {
    Client controller(server.port());
    controller.send({{"kind", "hello"}});
    const json hello = controller.until("state", "hello");
    CHECK(hello.contains("config"));
    CHECK(hello["role"] == "controller");

    Client observer(server.port());
    observer.send({{"kind", "hello"}});
    CHECK(observer.until("state", "hello")["role"] == "observer");
    observer.send({{"kind", "set_closure"}, {"angle", 40}});
    CHECK(observer.until("error")["message"].get<std::string>().find("read-only") != std::string::npos);

    controller.send_raw("{broken\n");
    controller.until("error");

    controller.send({{"kind", "set_closure"}, {"angle", 180}});
    json s = controller.until("state", "set_closure");
    CHECK(s["setpoints"][0] == 700.0);
    CHECK(s["setpoints"][1] == 820.0);

    controller.send({{"kind", "set_closure"}, {"angle", 90}});
    s = controller.until("state", "set_closure");
    const auto expected = control::map_gesture(90.0);
    CHECK(s["setpoints"][0].get<double>() == doctest::Approx(expected.agonist));
    CHECK(s["setpoints"][1].get<double>() == doctest::Approx(expected.antagonist));

    // Open, then close slowly onto the object until the controller holds.
    controller.send({{"kind", "set_closure"}, {"angle", 180}});
    controller.until("state", "set_closure");
    double angle = 115.0;
    std::string mode;
    for (int i = 0; i < 400 && mode != "CONTACT_HOLD"; ++i) {
      controller.send({{"kind", "set_closure"}, {"angle", angle}});
      mode = controller.until("state", "set_closure")["mode"];
      angle -= 0.1;
    }
    REQUIRE(mode == "CONTACT_HOLD");

    controller.send({{"kind", "inject"}, {"type", "induced_slip"}, {"finger", "thumb"}});
    s = controller.until("state", "inject");
    bool slip_mode = s["mode"] == "SLIP_COMP";
    for (int i = 0; i < 3 && !slip_mode; ++i) slip_mode = controller.until("state")["mode"] == "SLIP_COMP";
    CHECK(slip_mode);
  }

  stop = true;
  loop.join();
}

TEST_CASE("bind failure is reported") {
  SessionServer first(live_scenario(), {0, 50.0});
  CHECK_THROWS_AS(SessionServer(live_scenario(), {first.port(), 50.0}), std::runtime_error);
}
