#include "velopad/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <csignal>
#include <deque>
#include <thread>
#include <vector>

namespace velopad {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, SessionConfig base, asio::thread_pool& workers)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        session_(std::move(base)),
        workers_(workers) {}

  void start() {
    asio::dispatch(ws_.get_executor(), [self = shared_from_this()] {
      self->ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      self->ws_.async_accept([self](beast::error_code ec) {
        if (ec) return;
        self->read();
        self->schedule_capture();
      });
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      for (const auto& reply : handle_message(self->session_, text)) self->send(reply.dump());
      self->read();
    });
  }

  void schedule_capture() {
    if (closed_) return;
    const auto period = std::chrono::duration<double>(session_.config().capture_period());
    timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(period));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->start_capture();
      self->schedule_capture();
    });
  }

  void start_capture() {
    // One capture at a time keeps capture ids gap-free and in order.
    if (capture_in_flight_) return;
    capture_in_flight_ = true;
    CaptureJob job = session_.prepare_capture();
    asio::post(workers_, [self = shared_from_this(), job = std::move(job)] {
      std::vector<std::string> out;
      try {
        const auto result = run_capture(job);
        for (const auto& m : capture_messages(result, job.config)) out.push_back(m.dump());
      } catch (const std::exception& e) {
        out.push_back(nlohmann::json{{"type", "error"}, {"message", e.what()}}.dump());
      }
      asio::post(self->ws_.get_executor(), [self, out = std::move(out)] {
        self->capture_in_flight_ = false;
        for (const auto& m : out) self->send(m);
      });
    });
  }

  void send(std::string message) {
    if (closed_) return;
    queue_.push_back(std::move(message));
    if (queue_.size() == 1) write_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }

  void close() {
    closed_ = true;
    timer_.cancel();
    queue_.clear();
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  PadSession session_;
  asio::thread_pool& workers_;
  std::deque<std::string> queue_;
  bool capture_in_flight_ = false;
  bool closed_ = false;
};

}  // namespace

struct SessionServer::Impl {
  Impl(SessionConfig base_config, const std::string& host, unsigned short port)
      : base(std::move(base_config)), acceptor(ioc), workers(2) {
    base.validate();
    const tcp::endpoint endpoint(asio::ip::make_address(host), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(asio::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), base, workers)->start();
      accept();
    });
  }

  SessionConfig base;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::thread_pool workers;
};

SessionServer::SessionServer(SessionConfig base, const std::string& host, unsigned short port)
    : impl_(std::make_unique<Impl>(std::move(base), host, port)) {}

SessionServer::~SessionServer() {
  stop();
  impl_->workers.join();
}

unsigned short SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::run(unsigned threads, bool handle_signals) {
  impl_->accept();
  asio::signal_set signals(impl_->ioc);
  if (handle_signals) {
    signals.add(SIGINT);
    signals.add(SIGTERM);
    signals.async_wait([this](beast::error_code, int) { stop(); });
  }
  std::vector<std::thread> extra;
  for (unsigned i = 1; i < threads; ++i) extra.emplace_back([this] { impl_->ioc.run(); });
  impl_->ioc.run();
  for (auto& t : extra) t.join();
}

void SessionServer::stop() { impl_->ioc.stop(); }

}  // namespace velopad
