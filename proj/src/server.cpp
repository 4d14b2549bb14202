#include "tabi/server.hpp"

#include <deque>
#include <optional>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <spdlog/spdlog.h>

#include "tabi/error.hpp"

namespace tabi {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

struct Target {
  std::vector<std::string> parts;
  std::optional<std::string> after;
};

Target parse_target(std::string_view target) {
  Target t;
  std::string_view path = target;
  if (const auto q = target.find('?'); q != std::string_view::npos) {
    path = target.substr(0, q);
    std::string_view query = target.substr(q + 1);
    while (!query.empty()) {
      const auto amp = query.find('&');
      const auto pair = query.substr(0, amp);
      if (pair.substr(0, 6) == "after=") t.after = std::string(pair.substr(6));
      if (amp == std::string_view::npos) break;
      query.remove_prefix(amp + 1);
    }
  }
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    t.parts.emplace_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return t;
}

http::status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_session: return http::status::not_found;
    case ErrorCode::session_not_active: return http::status::conflict;
    case ErrorCode::utterance_rejected:
    case ErrorCode::invalid_argument: return http::status::bad_request;
    case ErrorCode::capacity_exceeded: return http::status::service_unavailable;
    case ErrorCode::backend_timeout:
    case ErrorCode::backend_unavailable:
    case ErrorCode::malformed_response: return http::status::bad_gateway;
    default: return http::status::internal_server_error;
  }
}

Response json_response(const Request& req, http::status status, const nlohmann::json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

Response error_response(const Request& req, http::status status, std::string_view code, std::string_view message) {
  return json_response(req, status, {{"error", error_payload(code, message)}});
}

Response handle_request(SessionHub& hub, const Request& req) {
  const auto target = parse_target(std::string_view(req.target().data(), req.target().size()));
  const auto& p = target.parts;
  try {
    if (req.method() == http::verb::options) {
      Response res{http::status::no_content, req.version()};
      res.set(http::field::access_control_allow_origin, "*");
      res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type");
      res.keep_alive(req.keep_alive());
      res.prepare_payload();
      return res;
    }
    if (p.size() == 1 && p[0] == "health" && req.method() == http::verb::get) {
      return json_response(req, http::status::ok,
                           {{"status", "ok"},
                            {"active_sessions", hub.active_sessions()},
                            {"sessions", hub.session_count()}});
    }
    if (p.size() == 1 && p[0] == "sessions" && req.method() == http::verb::post) {
      auto created = hub.create_session();
      nlohmann::json body;
      body["session_id"] = created.session_id;
      body["messages"] = nlohmann::json::array();
      for (const auto& m : created.messages) body["messages"].push_back(to_json(m));
      return json_response(req, http::status::created, body);
    }
    if (p.size() == 2 && p[0] == "sessions" && req.method() == http::verb::get) {
      return json_response(req, http::status::ok, hub.snapshot(p[1]));
    }
    if (p.size() == 3 && p[0] == "sessions" && p[2] == "utterances" && req.method() == http::verb::post) {
      const auto body = nlohmann::json::parse(req.body(), nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
        return error_response(req, http::status::bad_request, "invalid-argument",
                              "expected a JSON object with a string \"text\"");
      }
      hub.post_utterance(p[1], body["text"].get<std::string>());
      return json_response(req, http::status::accepted, {{"accepted", true}});
    }
    return error_response(req, http::status::not_found, "not-found", "no such route");
  } catch (const Error& e) {
    return error_response(req, status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    spdlog::error("request failed: {}", e.what());
    return error_response(req, http::status::internal_server_error, "internal", e.what());
  }
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, SessionHub& hub, std::string session_id, std::optional<std::uint64_t> after)
      : ws_(std::move(socket)), hub_(hub), session_id_(std::move(session_id)), after_(after) {}

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = weak_from_this();
    auto executor = ws_.get_executor();
    try {
      subscription_ = hub_.subscribe(session_id_, after_, [weak, executor](const WireMessage& m) {
        // Never hold a strong reference here: this runs under the hub lock.
        net::post(executor, [weak, text = to_json(m).dump()]() mutable {
          if (auto self = weak.lock()) self->send(std::move(text));
        });
      });
    } catch (const Error&) {
      ws_.async_close(websocket::close_code::policy_error, [self = shared_from_this()](beast::error_code) {});
      return;
    }
    do_read();
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->do_write();
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      subscription_.reset();
      return;
    }
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle_incoming(text);
    do_read();
  }

  void handle_incoming(const std::string& text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    try {
      if (j.is_discarded()) throw Error(ErrorCode::invalid_argument, "message is not JSON");
      const auto m = wire_message_from_json(j);
      if (m.kind != MessageKind::customer_utterance) {
        throw Error(ErrorCode::invalid_argument, "only customer_utterance is accepted from clients");
      }
      if (!m.payload.contains("text") || !m.payload["text"].is_string()) {
        throw Error(ErrorCode::utterance_rejected, "customer_utterance needs a string text");
      }
      hub_.post_utterance(session_id_, m.payload["text"].get<std::string>());
    } catch (const Error& e) {
      hub_.publish_error(session_id_, to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      hub_.publish_error(session_id_, "invalid-argument", e.what());
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  SessionHub& hub_;
  std::string session_id_;
  std::optional<std::uint64_t> after_;
  SessionHub::Subscription subscription_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, SessionHub& hub) : stream_(std::move(socket)), hub_(hub) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      upgrade();
      return;
    }
    send(handle_request(hub_, req_));
  }

  void upgrade() {
    const auto target = parse_target(std::string_view(req_.target().data(), req_.target().size()));
    const auto& p = target.parts;
    std::optional<std::uint64_t> after;
    bool ok = p.size() == 3 && p[0] == "sessions" && p[2] == "stream" && hub_.contains(p[1]);
    if (ok && target.after) {
      try {
        after = std::stoull(*target.after);
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      send(error_response(req_, http::status::not_found, "unknown-session", "no such session stream"));
      return;
    }
    stream_.expires_never();
    std::make_shared<WsSession>(stream_.release_socket(), hub_, p[1], after)->run(std::move(req_));
  }

  void send(Response res) {
    auto sp = std::make_shared<Response>(std::move(res));
    const bool keep_alive = sp->keep_alive();
    http::async_write(stream_, *sp, [self = shared_from_this(), sp, keep_alive](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!keep_alive) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Request req_;
  SessionHub& hub_;
};

}  // namespace

struct Server::Impl {
  Impl(SessionHub& h, std::string addr, unsigned short p, int threads)
      : hub(h), address(std::move(addr)), requested_port(p), thread_count(threads < 1 ? 1 : threads),
        ioc(thread_count), acceptor(net::make_strand(ioc)) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
        spdlog::warn("accept failed: {}", ec.message());
      } else {
        std::make_shared<HttpSession>(std::move(socket), hub)->run();
      }
      do_accept();
    });
  }

  SessionHub& hub;
  std::string address;
  unsigned short requested_port;
  int thread_count;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> threads;
  unsigned short bound_port = 0;
};

Server::Server(SessionHub& hub, std::string address, unsigned short port, int io_threads)
    : impl_(std::make_unique<Impl>(hub, std::move(address), port, io_threads)) {}

Server::~Server() { stop(); }

void Server::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint{net::ip::make_address(i.address), i.requested_port};
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  i.bound_port = i.acceptor.local_endpoint().port();
  i.do_accept();
  for (int n = 0; n < i.thread_count; ++n) i.threads.emplace_back([&i] { i.ioc.run(); });
  spdlog::info("listening on {}:{}", i.address, i.bound_port);
}

void Server::stop() {
  if (!impl_) return;
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->threads.clear();
}

unsigned short Server::port() const { return impl_->bound_port; }

}  // namespace tabi
