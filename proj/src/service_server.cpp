#include <atomic>
#include <csignal>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "faceatlas/service.hpp"

namespace faceatlas {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<const Engine> engine, net::thread_pool& pool,
            std::string id, std::size_t max_in_flight)
      : ws_(std::move(socket)),
        engine_(engine),
        pool_(pool),
        session_(std::move(engine), std::move(id), max_in_flight) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) {
        spdlog::warn("websocket handshake failed: {}", ec.message());
        return;
      }
      spdlog::info("session {} opened", self->session_.id());
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      const auto& c = session_.counters();
      spdlog::info("session {} closed: {} frames, {} dropped, {} errors", session_.id(), c.frames,
                   c.dropped, c.errors);
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    apply(session_.handle_message(text));
    read();
  }

  void apply(Session::Step step) {
    for (auto& reply : step.replies) send(reply.dump());
    for (auto& job : step.start) {
      net::post(pool_, [self = shared_from_this(), job = std::move(job)]() mutable {
        nlohmann::json reply = evaluate_job(*self->engine_, job);
        net::post(self->ws_.get_executor(),
                  [self, ts = job.ts, reply = std::move(reply)]() mutable {
                    self->apply(self->session_.complete(ts, std::move(reply)));
                  });
      });
    }
  }

  void send(std::string text) {
    if (closed_) return;
    outbox_.push_back(std::move(text));
    if (!writing_) write();
  }

  void write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->outbox_.pop_front();
                      if (ec) {
                        self->closed_ = true;
                        self->outbox_.clear();
                      }
                      if (self->outbox_.empty()) {
                        self->writing_ = false;
                      } else {
                        self->write();
                      }
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<const Engine> engine_;
  net::thread_pool& pool_;
  Session session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  using Spawn = std::function<void(tcp::socket, http::request<http::string_body>)>;

  HttpSession(tcp::socket socket, std::string static_dir, Spawn spawn)
      : stream_(std::move(socket)), static_dir_(std::move(static_dir)), spawn_(std::move(spawn)) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      spawn_(stream_.release_socket(), std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(respond());
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  http::response<http::string_body> respond() {
    const auto make = [&](http::status status, std::string_view type, std::string body) {
      http::response<http::string_body> res{status, req_.version()};
      res.set(http::field::server, "faceatlas");
      res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
      res.keep_alive(req_.keep_alive());
      res.body() = std::move(body);
      res.prepare_payload();
      return res;
    };
    std::string target(req_.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);

    if (req_.method() != http::verb::get) {
      return make(http::status::method_not_allowed, "text/plain", "method not allowed\n");
    }
    if (target == "/healthz") return make(http::status::ok, "text/plain", "ok");
    if (!static_dir_.empty() && target.find("..") == std::string::npos && !target.empty() &&
        target.front() == '/') {
      std::filesystem::path path = std::filesystem::path(static_dir_) / target.substr(1);
      if (target.back() == '/') path /= "index.html";
      std::ifstream in(path, std::ios::binary);
      if (in) {
        std::ostringstream body;
        body << in.rdbuf();
        return make(http::status::ok, mime_type(path), body.str());
      }
    }
    return make(http::status::not_found, "text/plain", "not found\n");
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::string static_dir_;
  Spawn spawn_;
};

}  // namespace

struct Server::Impl {
  std::shared_ptr<const Engine> engine;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::thread_pool pool;
  std::atomic<std::uint64_t> next_session{1};

  Impl(std::shared_ptr<const Engine> e, ServerOptions o)
      : engine(std::move(e)), options(std::move(o)), pool(std::max<std::size_t>(1, options.workers)) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
        if (!acceptor.is_open()) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), options.static_dir,
                                      [this](tcp::socket s, http::request<http::string_body> req) {
                                        std::make_shared<WsSession>(
                                            std::move(s), engine, pool,
                                            std::to_string(next_session++), options.max_in_flight)
                                            ->start(std::move(req));
                                      })
            ->start();
      }
      accept();
    });
  }
};

Server::Server(std::shared_ptr<const Engine> engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(engine), std::move(options))) {
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.host, ec);
  if (ec) throw std::invalid_argument("bad listen address: " + impl_->options.host);
  const tcp::endpoint endpoint{address, impl_->options.port};
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (ec) {
    throw PortInUse("cannot listen on " + impl_->options.host + ":" +
                    std::to_string(impl_->options.port) + ": " + ec.message());
  }
  acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw PortInUse("listen failed: " + ec.message());
}

Server::~Server() {
  impl_->ioc.stop();
  impl_->pool.join();
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run(bool handle_signals) {
  std::optional<net::signal_set> signals;
  if (handle_signals) {
    signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    signals->async_wait([this](beast::error_code ec, int) {
      if (!ec) {
        spdlog::info("signal received, shutting down");
        stop();
      }
    });
  }
  impl_->accept();
  impl_->ioc.run();
}

void Server::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    impl->ioc.stop();
  });
}

}  // namespace faceatlas
