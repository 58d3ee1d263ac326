#pragma once

// HTTP + WebSocket front end for Session. Everything runs on one io_context
// thread, so a session's tick(), receive() and outbound writes never race.

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "lucifer/session/session.hpp"

#ifndef LUCIFER_VERSION
#define LUCIFER_VERSION "0.0.0"
#endif

namespace lucifer {

class BindError : public Error {
 public:
  using Error::Error;
};

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::string static_dir;      // UI bundle; a placeholder page is served when empty
  bool multi_session = false;
};

using SessionFactory = std::function<std::unique_ptr<Session>(Session::Outbox)>;

inline nlohmann::json build_info() {
  return {{"status", "ok"},
          {"name", "lucifer"},
          {"version", LUCIFER_VERSION},
          {"compiler", __VERSION__},
          {"cxx_standard", __cplusplus}};
}

inline constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>lucifer session</title></head>
<body>
<p>Session server is running. Build the steering UI and start the server with <code>--static DIR</code>,
or connect a WebSocket client to <code>/session</code>.</p>
</body></html>
)";

inline std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

namespace detail {

namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct ServerShared {
  ServerConfig cfg;
  SessionFactory factory;
  std::atomic<int> active{0};
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<ServerShared> shared)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), shared_(std::move(shared)) {}

  void run(http::request<http::string_body> req) {
    ++shared_->active;
    counted_ = true;
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  ~WsConnection() {
    if (counted_) --shared_->active;
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsConnection> weak = shared_from_this();
    try {
      session_ = shared_->factory([weak](const SessionMessage& m) {
        if (auto self = weak.lock()) self->send(to_json(m).dump());
      });
    } catch (const std::exception& e) {
      send(to_json(SessionMessage{MessageKind::Error, {{"message", e.what()}}, 1}).dump());
      return;
    }
    session_->open();
    do_read();
    schedule_tick();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      close();
      return;
    }
    session_->receive(beast::buffers_to_string(buffer_.data()));
    buffer_.consume(buffer_.size());
    do_read();
  }

  void schedule_tick() {
    if (closed_) return;
    const auto interval = std::min<Session::Clock::duration>(session_->period(), std::chrono::milliseconds(20));
    timer_.expires_after(interval);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->session_->tick();
      self->schedule_tick();
    });
  }

  void send(std::string text) {
    if (closed_) return;
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->do_write();
    });
  }

  void close() {
    closed_ = true;
    timer_.cancel();
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  std::shared_ptr<ServerShared> shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::unique_ptr<Session> session_;
  bool closed_ = false;
  bool counted_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, std::shared_ptr<ServerShared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/session") return reply(http::status::not_found, "text/plain", "no such channel\n");
      if (!shared_->cfg.multi_session && shared_->active.load() > 0)
        return reply(http::status::conflict, "text/plain", "a session is already active\n");
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), shared_)->run(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head)
      return reply(http::status::method_not_allowed, "text/plain", "GET only\n");

    const std::string target(req_.target().substr(0, req_.target().find('?')));
    if (target == "/healthz") {
      auto info = build_info();
      info["sessions"] = shared_->active.load();
      info["multi_session"] = shared_->cfg.multi_session;
      return reply(http::status::ok, "application/json", info.dump() + "\n");
    }
    serve_static(target);
  }

  void serve_static(const std::string& target) {
    namespace fs = std::filesystem;
    const std::string rel = target == "/" ? "index.html" : target.substr(1);
    if (shared_->cfg.static_dir.empty()) {
      if (rel == "index.html") return reply(http::status::ok, "text/html; charset=utf-8", kPlaceholderPage);
      return reply(http::status::not_found, "text/plain", "not found\n");
    }
    if (rel.find("..") != std::string::npos) return reply(http::status::bad_request, "text/plain", "bad path\n");
    const fs::path path = fs::path(shared_->cfg.static_dir) / rel;
    std::ifstream in(path, std::ios::binary);
    if (!in || fs::is_directory(path)) return reply(http::status::not_found, "text/plain", "not found\n");
    std::ostringstream body;
    body << in.rdbuf();
    reply(http::status::ok, mime_type(path), body.str());
  }

  void reply(http::status status, const std::string& type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "lucifer");
    res->set(http::field::content_type, type);
    res->keep_alive(false);
    if (req_.method() != http::verb::head) res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<ServerShared> shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace detail

/// Binds on construction; run() serves until stop() is called.
class SessionServer {
 public:
  SessionServer(ServerConfig cfg, SessionFactory factory)
      : shared_(std::make_shared<detail::ServerShared>()), acceptor_(ioc_) {
    shared_->cfg = std::move(cfg);
    shared_->factory = std::move(factory);
    namespace net = boost::asio;
    boost::system::error_code ec;
    const auto addr = net::ip::make_address(shared_->cfg.address, ec);
    if (ec) throw BindError("bad bind address " + shared_->cfg.address);
    const detail::tcp::endpoint ep{addr, shared_->cfg.port};
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
      throw BindError("cannot bind " + shared_->cfg.address + ":" + std::to_string(shared_->cfg.port) + ": " +
                      ec.message());
    port_ = acceptor_.local_endpoint().port();
    do_accept();
  }

  unsigned short port() const { return port_; }

  /// Blocks on the calling thread.
  void run() { ioc_.run(); }

  /// SIGINT/SIGTERM stop the server.
  void stop_on_signals() {
    signals_.emplace(ioc_, SIGINT, SIGTERM);
    signals_->async_wait([this](const boost::system::error_code& ec, int) {
      if (!ec) stop();
    });
  }

  void stop() {
    boost::asio::post(ioc_, [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      ioc_.stop();
    });
  }

 private:
  void do_accept() {
    acceptor_.async_accept(boost::asio::make_strand(ioc_), [this](boost::system::error_code ec, detail::tcp::socket s) {
      if (ec) return;
      std::make_shared<detail::HttpConnection>(std::move(s), shared_)->run();
      do_accept();
    });
  }

  boost::asio::io_context ioc_{1};
  std::shared_ptr<detail::ServerShared> shared_;
  detail::tcp::acceptor acceptor_;
  unsigned short port_ = 0;
  std::optional<boost::asio::signal_set> signals_;
};

}  // namespace lucifer
