#include <gtest/gtest.h>

#include <sys/socket.h>
#include <sys/time.h>

#include <cstdio>
#include <filesystem>
#include <thread>

#include "probekit/service.hpp"
#include "session_fuzz.hpp"
#include "test_support.hpp"

using namespace probekit;
namespace net = boost::asio;
namespace websocket = boost::beast::websocket;

namespace {

// Blocking websocket client; reads time out after 10 s instead of hanging.
class Client {
 public:
  explicit Client(unsigned short port) {
    net::ip::tcp::resolver resolver(io_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    timeval tv{10, 0};
    setsockopt(ws_.next_layer().native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ws_.handshake("127.0.0.1", "/");
  }

  void send_text(const std::string& text) { ws_.write(net::buffer(text)); }
  void send(const Json& msg) { send_text(msg.dump()); }
  void command(const Command& c) { send({{"type", "command"}, {"command", command_to_json(c)}}); }

  Json read() {
    boost::beast::flat_buffer buffer;
    ws_.read(buffer);
    return Json::parse(boost::beast::buffers_to_string(buffer.data()));
  }

  Json read_type(const std::string& type) {
    Json m = read();
    EXPECT_EQ(m.at("type"), type) << m.dump();
    return m;
  }

 private:
  net::io_context io_;
  websocket::stream<net::ip::tcp::socket> ws_{io_};
};

const bool kQuiet = (spdlog::set_level(spdlog::level::off), true);

Session loaded_session() {
  Session s;
  s.apply(Command{1, cmd::LoadGraph{std::nullopt, SyntheticSpec{30, 60, 3, 2}, false}}, false);
  return s;
}

ServiceOptions any_port() {
  ServiceOptions o;
  o.port = 0;
  return o;
}

Command begin_toward(const Session& s, const NodeId& id, std::uint64_t seq = 0) {
  const Vec3 target = s.state().graph.node(id).position;
  const Vec3 eye = s.state().viewpoint.position;
  return Command{seq, cmd::BeginProbe{Ray::make(eye, target - eye), distance(eye, target), 0.6}};
}

bool has_change(const Json& changes, const std::string& op, const Json& path) {
  for (const auto& c : changes) {
    if (c.at("op") == op && c.at("path") == path) return true;
  }
  return false;
}

bool touches_path(const Json& changes, const std::string& head) {
  for (const auto& c : changes) {
    if (!c.at("path").empty() && c.at("path")[0] == head) return true;
    if (c.at("path").size() >= 2 && c.at("path")[1] == head) return true;
  }
  return false;
}

}  // namespace

TEST(Wire, MalformedMessages) {
  Session s;
  for (const std::string text : {"garbage", "[1,2]", "{}", R"({"type": 5})", R"({"type": "dance"})",
                                 R"({"type": "command"})", R"({"type": "command", "command": {"kind": "Nope"}})"}) {
    const auto r = wire::handle_message(s, text);
    ASSERT_TRUE(r.to_sender) << text;
    EXPECT_EQ(r.to_sender->at("type"), "error") << text;
    EXPECT_EQ(r.to_sender->at("code"), "MalformedCommand") << text;
    EXPECT_TRUE(r.to_sender->at("seq").is_null()) << text;
    EXPECT_FALSE(r.broadcast);
  }
  const auto bad_payload =
      wire::handle_message(s, R"({"type": "command", "command": {"seq": 4, "kind": "SetProbeActive", "payload": {}}})");
  EXPECT_EQ(bad_payload.to_sender->at("seq"), 4);
  EXPECT_EQ(s.state(), SessionState{});
}

TEST(Wire, SyncAndCommands) {
  Session s;
  const auto sync = wire::handle_message(s, R"({"type": "sync_request"})");
  ASSERT_TRUE(sync.to_sender);
  EXPECT_EQ(sync.to_sender->at("type"), "full_state");
  EXPECT_EQ(sync.to_sender->at("hash"), s.hash());

  const auto ok = wire::handle_message(
      s, R"({"type": "command", "command": {"kind": "SetViewMode", "payload": {"mode": "exocentric"}}})");
  ASSERT_TRUE(ok.broadcast);
  EXPECT_FALSE(ok.to_sender);
  EXPECT_EQ(ok.broadcast->at("seq"), 1);
  EXPECT_EQ(ok.broadcast->at("kind"), "SetViewMode");
  EXPECT_EQ(ok.broadcast->at("hash"), s.hash());
  ASSERT_TRUE(ok.record);
  EXPECT_EQ(parse_command(Json::parse(*ok.record)).seq, 1u);

  const auto late = wire::handle_message(
      s, R"({"type": "command", "command": {"seq": 7, "kind": "SetViewMode", "payload": {"mode": "egocentric"}}})");
  ASSERT_TRUE(late.to_sender);
  EXPECT_EQ(late.to_sender->at("code"), "OutOfOrder");
  EXPECT_EQ(late.to_sender->at("seq"), 7);
  EXPECT_FALSE(late.record);
}

TEST(Service, FullStateOnConnect) {
  ProbeService service(loaded_session(), any_port());
  service.start();
  Client c(service.port());
  const Json m = c.read_type("full_state");
  EXPECT_EQ(m.at("snapshot").at("graph").at("nodes").size(), 30u);
  EXPECT_EQ(m.at("hash"), hex64(fnv1a64(canonical_dump(m.at("snapshot")))));
  EXPECT_EQ(m.at("hash"), service.inspect([](const Session& s) { return s.hash(); }));
}

TEST(Service, PlaceProbeDeltaCarriesCueGeometry) {
  const Session initial = loaded_session();
  const NodeId target = initial.state().graph.nodes().begin()->first;
  const Command begin = begin_toward(initial, target);
  ProbeService service(initial, any_port());
  service.start();
  Client c(service.port());
  c.read_type("full_state");
  c.command(begin);
  const Json d1 = c.read_type("delta");
  EXPECT_EQ(d1.at("seq"), 2);
  EXPECT_EQ(d1.at("kind"), "BeginProbe");
  c.command(Command{0, cmd::PlaceProbe{}});
  const Json d2 = c.read_type("delta");
  EXPECT_EQ(d2.at("seq"), 3);
  const Json& changes = d2.at("changes");
  bool probe_placed = false;
  for (const auto& ch : changes) {
    if (ch.at("op") == "upsert" && ch.at("path") == Json::array({"probes"}) && ch.at("key") == "1")
      probe_placed = ch.at("value").at("placed").get<bool>() && !ch.at("value").at("content").is_null();
  }
  EXPECT_TRUE(probe_placed) << changes.dump();
  EXPECT_TRUE(has_change(changes, "set", Json::array({"derived", "cones"}))) << changes.dump();
  EXPECT_TRUE(has_change(changes, "set", Json::array({"derived", "tunnels"}))) << changes.dump();
  EXPECT_TRUE(touches_path(changes, "highlights"));
}

TEST(Service, BothClientsReceiveDelta) {
  ProbeService service(loaded_session(), any_port());
  service.start();
  Client a(service.port());
  Client b(service.port());
  a.read_type("full_state");
  b.read_type("full_state");
  a.command(Command{0, cmd::SetViewMode{ViewMode::Exocentric}});
  const Json da = a.read_type("delta");
  const Json db = b.read_type("delta");
  EXPECT_EQ(da, db);
  EXPECT_EQ(da.at("seq"), 2);
}

TEST(Service, MalformedMessageKeepsConnection) {
  ProbeService service(loaded_session(), any_port());
  service.start();
  Client a(service.port());
  Client b(service.port());
  a.read_type("full_state");
  b.read_type("full_state");
  a.send_text("{not json");
  const Json e = a.read_type("error");
  EXPECT_EQ(e.at("code"), "MalformedCommand");
  a.command(Command{0, cmd::CreateLink{}});
  EXPECT_EQ(a.read_type("error").at("code"), "SelectionError");
  a.command(Command{0, cmd::SetViewMode{ViewMode::Exocentric}});
  EXPECT_EQ(a.read_type("delta").at("seq"), 2);
  // the other client saw only the delta
  EXPECT_EQ(b.read_type("delta").at("seq"), 2);
  a.send({{"type", "sync_request"}});
  EXPECT_EQ(a.read_type("full_state").at("snapshot").at("applied_seq"), 2);
}

TEST(Service, PortInUse) {
  ProbeService first(Session{}, any_port());
  ServiceOptions same;
  same.port = first.port();
  EXPECT_ERROR_CODE(ProbeService(Session{}, same), ErrorCode::PortInUse);
}

TEST(Service, EchoLawAndRecordReplay) {
  const auto gen = session_fuzz::generate(77, 150);
  const auto record = std::filesystem::temp_directory_path() / ("probekit_record_" + std::to_string(::getpid()));
  std::filesystem::remove(record);
  ServiceOptions options = any_port();
  options.record_path = record.string();
  std::string server_hash;
  std::string server_doc;
  {
    ProbeService service(Session{}, options);
    service.start();
    Client sender(service.port());
    Client observer(service.port());
    sender.read_type("full_state");
    Json mirror = observer.read_type("full_state").at("snapshot");

    // the generated log includes rejected commands; replay it verbatim
    std::size_t expected_deltas = 0;
    for (const auto& c : gen.log) {
      sender.command(c);
      const Json reply = sender.read();
      ASSERT_EQ(reply.at("seq"), c.seq);
      if (reply.at("type") == "delta") ++expected_deltas;
    }
    ASSERT_EQ(expected_deltas, gen.accepted.size());
    std::uint64_t last = 0;
    std::string last_hash;
    for (std::size_t i = 0; i < expected_deltas; ++i) {
      const Json d = observer.read_type("delta");
      ASSERT_EQ(d.at("seq").get<std::uint64_t>(), last + 1);
      last = d.at("seq").get<std::uint64_t>();
      apply_changes(mirror, d.at("changes"));
      ASSERT_EQ(hex64(fnv1a64(canonical_dump(mirror))), d.at("hash"));
      last_hash = d.at("hash");
    }
    server_doc = service.inspect([](const Session& s) { return canonical_dump(s.document()); });
    server_hash = service.inspect([](const Session& s) { return s.hash(); });
    EXPECT_EQ(canonical_dump(mirror), server_doc);
    EXPECT_EQ(last_hash, server_hash);
  }
  const auto replayed = replay(load_command_log(record.string()));
  EXPECT_TRUE(replayed.rejected.empty());
  EXPECT_EQ(state_hash(replayed.state), server_hash);
  std::filesystem::remove(record);
}

TEST(Service, ConcurrentSendersGetGaplessOrder) {
  ProbeService service(loaded_session(), any_port());
  service.start();
  Client observer(service.port());
  observer.read_type("full_state");
  constexpr int kPerSender = 40;
  auto sender = [&](std::uint64_t seed) {
    Client c(service.port());
    c.read_type("full_state");
    SplitMix64 rng(seed);
    for (int i = 0; i < kPerSender; ++i) {
      c.command(Command{0, cmd::SetViewpoint{4.0 * rng.in_unit_ball(), Quat{}}});
    }
    // drain: every delta from both senders reaches this client too
    for (int i = 0; i < 2 * kPerSender; ++i) c.read_type("delta");
  };
  std::thread t1(sender, 1);
  std::thread t2(sender, 2);
  t1.join();
  t2.join();
  std::uint64_t expect = 2;
  for (int i = 0; i < 2 * kPerSender; ++i) {
    const Json d = observer.read_type("delta");
    ASSERT_EQ(d.at("seq").get<std::uint64_t>(), expect++);
  }
  EXPECT_EQ(service.inspect([](const Session& s) { return s.state().applied_seq; }), 1u + 2 * kPerSender);
}
