#pragma once

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include <spdlog/spdlog.h>

#include "probekit/commands.hpp"
#include "probekit/error.hpp"
#include "probekit/session.hpp"

namespace probekit {

/// Wire messages.
///
/// Client to server:
///   {"type":"command","command":{"seq":n?,"kind":"...","payload":{...}}}
///   {"type":"sync_request"}
/// Server to client:
///   {"type":"full_state","snapshot":{...},"hash":"..."}      on connect and on sync_request
///   {"type":"delta","seq":n,"kind":"...","changes":[...],"hash":"..."}   to every client
///   {"type":"error","seq":n|null,"code":"...","message":"..."}           to the sender only
namespace wire {

inline Json full_state(const Session& s) {
  return {{"type", "full_state"}, {"snapshot", s.document()}, {"hash", s.hash()}};
}

inline Json delta(const ApplyOutcome& r, CommandKind kind, const std::string& hash) {
  return {{"type", "delta"},
          {"seq", r.seq},
          {"kind", std::string(to_string(kind))},
          {"changes", r.changes},
          {"hash", hash}};
}

inline Json error(std::optional<std::uint64_t> seq, ErrorCode code, const std::string& message) {
  return {{"type", "error"},
          {"seq", seq ? Json(*seq) : Json(nullptr)},
          {"code", std::string(to_string(code))},
          {"message", message}};
}

/// Outcome of handling one client message: what goes back to the sender
/// and what goes to everyone.
struct Reply {
  std::optional<Json> to_sender;
  std::optional<Json> broadcast;
  /// Canonical command line for the record log, for accepted commands.
  std::optional<std::string> record;
};

/// Protocol logic without any networking, so it can be tested directly.
inline Reply handle_message(Session& session, const std::string& text) {
  Reply reply;
  Json msg = Json::parse(text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) {
    reply.to_sender = error(std::nullopt, ErrorCode::MalformedCommand, "message is not a JSON object");
    return reply;
  }
  auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) {
    reply.to_sender = error(std::nullopt, ErrorCode::MalformedCommand, "message has no type");
    return reply;
  }
  if (*type == "sync_request") {
    reply.to_sender = full_state(session);
    return reply;
  }
  if (*type != "command") {
    reply.to_sender =
        error(std::nullopt, ErrorCode::MalformedCommand, "unknown message type '" + type->get<std::string>() + "'");
    return reply;
  }
  std::optional<std::uint64_t> seq;
  Command command;
  try {
    auto body = msg.find("command");
    if (body == msg.end()) throw Error(ErrorCode::MalformedCommand, "command message has no 'command'");
    if (body->is_object() && body->contains("seq") && body->at("seq").is_number_unsigned())
      seq = body->at("seq").get<std::uint64_t>();
    command = parse_command(*body);
  } catch (const Error& e) {
    reply.to_sender = error(seq, e.code(), e.detail());
    return reply;
  }
  if (command.seq == 0) command.seq = session.next_seq();
  const ApplyOutcome r = session.apply(command);
  if (!r.ok) {
    reply.to_sender = error(r.seq, r.code, r.message);
    return reply;
  }
  reply.broadcast = delta(r, command.kind(), session.hash());
  reply.record = command_log_line(command);
  return reply;
}

}  // namespace wire

struct ServiceOptions {
  std::string address{"127.0.0.1"};
  /// 0 picks a free port; see ProbeService::port().
  unsigned short port{8080};
  /// Accepted commands are appended here as JSON lines, ready for replay.
  std::optional<std::string> record_path;
};

/// Websocket front end for one shared session. Everything runs on a single
/// io_context thread, so the session needs no locking.
class ProbeService {
 public:
  ProbeService(Session session, ServiceOptions options)
      : session_(std::move(session)), options_(std::move(options)), acceptor_(io_) {
    namespace net = boost::asio;
    boost::system::error_code ec;
    const auto address = net::ip::make_address(options_.address, ec);
    if (ec) throw Error(ErrorCode::InvalidParameter, "bad address '" + options_.address + "'");
    const net::ip::tcp::endpoint endpoint(address, options_.port);
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error(ErrorCode::PortInUse,
                  "cannot listen on " + options_.address + ":" + std::to_string(options_.port) + ": " + ec.message());
    }
    if (options_.record_path) {
      record_.open(*options_.record_path, std::ios::app);
      if (!record_) throw Error(ErrorCode::InvalidParameter, "cannot open record log '" + *options_.record_path + "'");
    }
  }

  ProbeService(const ProbeService&) = delete;
  ProbeService& operator=(const ProbeService&) = delete;

  ~ProbeService() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  /// Serves until stop() is called.
  void run() {
    accept();
    spdlog::info("serving on ws://{}:{}", options_.address, port());
    io_.run();
  }

  /// Serves until SIGINT or SIGTERM.
  void run_until_signal() {
    boost::asio::signal_set signals(io_, SIGINT, SIGTERM);
    signals.async_wait([this](const boost::system::error_code&, int) {
      spdlog::info("shutting down");
      stopped_ = true;
      io_.stop();
    });
    run();
  }

  /// Serves on a background thread.
  void start() {
    thread_ = std::thread([this] { run(); });
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    boost::asio::post(io_, [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      for (const auto& c : connections_) c->close();
    });
    io_.stop();
    if (thread_.joinable()) thread_.join();
  }

  /// Runs fn(const Session&) on the service thread and returns its result.
  template <typename Fn>
  auto inspect(Fn&& fn) {
    using R = decltype(fn(std::as_const(session_)));
    std::packaged_task<R()> task([&] { return fn(std::as_const(session_)); });
    auto future = task.get_future();
    boost::asio::post(io_, [&task] { task(); });
    return future.get();
  }

 private:
  class Connection : public std::enable_shared_from_this<Connection> {
   public:
    Connection(ProbeService& owner, boost::asio::ip::tcp::socket socket)
        : owner_(owner), ws_(std::move(socket)) {}

    void start() {
      ws_.async_accept([self = shared_from_this()](boost::beast::error_code ec) {
        if (ec) return;
        self->owner_.connections_.insert(self);
        spdlog::debug("client connected ({} total)", self->owner_.connections_.size());
        self->send(canonical_dump(wire::full_state(self->owner_.session_)));
        self->read();
      });
    }

    void send(std::string text) {
      outbox_.push_back(std::move(text));
      if (outbox_.size() == 1) write();
    }

    void close() {
      boost::beast::error_code ec;
      ws_.next_layer().close(ec);
    }

   private:
    void read() {
      ws_.async_read(buffer_, [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
        if (ec) {
          self->owner_.connections_.erase(self);
          spdlog::debug("client left: {}", ec.message());
          return;
        }
        std::string text = boost::beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        self->owner_.dispatch(*self, text);
        self->read();
      });
    }

    void write() {
      ws_.text(true);
      ws_.async_write(boost::asio::buffer(outbox_.front()),
                      [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
                        if (ec) {
                          self->owner_.connections_.erase(self);
                          return;
                        }
                        self->outbox_.pop_front();
                        if (!self->outbox_.empty()) self->write();
                      });
    }

    ProbeService& owner_;
    boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
    boost::beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
  };

  void accept() {
    acceptor_.async_accept([this](boost::system::error_code ec, boost::asio::ip::tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<Connection>(*this, std::move(socket))->start();
      accept();
    });
  }

  void dispatch(Connection& from, const std::string& text) {
    wire::Reply reply = wire::handle_message(session_, text);
    if (reply.to_sender) {
      if (reply.to_sender->at("type") == "error") spdlog::warn("rejected: {}", reply.to_sender->at("message").get<std::string>());
      from.send(canonical_dump(*reply.to_sender));
    }
    if (reply.broadcast) {
      const std::string text_out = canonical_dump(*reply.broadcast);
      for (const auto& c : connections_) c->send(text_out);
    }
    if (reply.record && record_) {
      record_ << *reply.record << '\n';
      record_.flush();
    }
  }

  Session session_;
  ServiceOptions options_;
  boost::asio::io_context io_{1};
  boost::asio::ip::tcp::acceptor acceptor_;
  std::set<std::shared_ptr<Connection>> connections_;
  std::ofstream record_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
};

}  // namespace probekit
