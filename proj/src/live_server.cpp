#include "cobot/live_server.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <functional>
#include <future>
#include <istream>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace cobot::live {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using boost::system::error_code;

std::optional<InputSample> QueuedInputSource::take(std::uint64_t) {
  auto pending = queue_.drain();
  if (pending.empty()) return std::nullopt;
  InputSample merged = pending.back();
  for (const auto& s : pending) {
    merged.mode_switch_pressed = merged.mode_switch_pressed || s.mode_switch_pressed;
    merged.grip_toggle_pressed = merged.grip_toggle_pressed || s.grip_toggle_pressed;
  }
  return merged;
}

namespace {

class Client : public std::enable_shared_from_this<Client> {
 public:
  using LineHandler = std::function<void(const std::shared_ptr<Client>&, const std::string&)>;
  using CloseHandler = std::function<void(const std::shared_ptr<Client>&)>;

  Client(std::size_t capacity, LineHandler on_line, CloseHandler on_close)
      : capacity_(capacity), on_line_(std::move(on_line)), on_close_(std::move(on_close)) {}
  virtual ~Client() = default;

  virtual void start() = 0;

  /// Must run on the io thread.
  void send(std::string line) {
    if (closed_) return;
    if (outbox_.size() >= capacity_) {  // client cannot keep up
      close();
      return;
    }
    outbox_.push_back(std::move(line));
    if (!writing_) writeNext();
  }

  /// Sends the remaining queue, then closes.
  void sendAndClose(std::string line) {
    send(std::move(line));
    close_after_flush_ = true;
    if (!writing_) close();
  }

  void closeAfterFlush() {
    close_after_flush_ = true;
    if (!writing_) close();
  }

  std::size_t pending() const { return outbox_.size(); }
  bool handshaken = false;

 protected:
  virtual void asyncWrite(const std::string& line, std::function<void(error_code)> done) = 0;
  virtual void shutdown() = 0;

  void deliverLine(const std::string& line) { on_line_(shared_from_this(), line); }

  void close() {
    if (closed_) return;
    closed_ = true;
    outbox_.clear();
    shutdown();
    on_close_(shared_from_this());
  }

  bool closed_ = false;

 private:
  void writeNext() {
    if (outbox_.empty()) {
      writing_ = false;
      if (close_after_flush_) close();
      return;
    }
    writing_ = true;
    auto self = shared_from_this();
    asyncWrite(outbox_.front(), [self](error_code ec) {
      if (self->closed_) return;
      if (ec) {
        self->close();
        return;
      }
      self->outbox_.pop_front();
      self->writeNext();
    });
  }

  std::size_t capacity_;
  LineHandler on_line_;
  CloseHandler on_close_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool close_after_flush_ = false;
};

class RawClient : public Client {
 public:
  RawClient(tcp::socket socket, std::size_t capacity, LineHandler a, CloseHandler b)
      : Client(capacity, std::move(a), std::move(b)), socket_(std::move(socket)) {}

  void start() override { readNext(); }

 protected:
  void asyncWrite(const std::string& line, std::function<void(error_code)> done) override {
    framed_ = line + "\n";
    asio::async_write(socket_, asio::buffer(framed_), [done](error_code ec, std::size_t) { done(ec); });
  }

  void shutdown() override {
    error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
  }

 private:
  void readNext() {
    auto self = std::static_pointer_cast<RawClient>(shared_from_this());
    asio::async_read_until(socket_, buffer_, '\n', [self](error_code ec, std::size_t) {
      if (self->closed_) return;
      if (ec) {
        self->close();
        return;
      }
      std::istream is(&self->buffer_);
      std::string line;
      std::getline(is, line);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      self->deliverLine(line);
      if (!self->closed_) self->readNext();
    });
  }

  tcp::socket socket_;
  asio::streambuf buffer_;
  std::string framed_;
};

class WsClient : public Client {
 public:
  WsClient(tcp::socket socket, std::size_t capacity, LineHandler a, CloseHandler b)
      : Client(capacity, std::move(a), std::move(b)), ws_(std::move(socket)) {}

  void start() override {
    auto self = std::static_pointer_cast<WsClient>(shared_from_this());
    ws_.text(true);
    ws_.async_accept([self](error_code ec) {
      if (ec) {
        self->close();
        return;
      }
      self->readNext();
    });
  }

 protected:
  void asyncWrite(const std::string& line, std::function<void(error_code)> done) override {
    framed_ = line + "\n";
    ws_.async_write(asio::buffer(framed_), [done](error_code ec, std::size_t) { done(ec); });
  }

  void shutdown() override {
    error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void readNext() {
    auto self = std::static_pointer_cast<WsClient>(shared_from_this());
    ws_.async_read(buffer_, [self](error_code ec, std::size_t) {
      if (self->closed_) return;
      if (ec) {
        self->close();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      std::size_t start = 0;
      while (start < text.size() && !self->closed_) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) self->deliverLine(line);
        start = end + 1;
      }
      if (!self->closed_) self->readNext();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::string framed_;
};

}  // namespace

class LiveServer::Impl {
 public:
  Impl(std::uint16_t port, std::size_t capacity)
      : acceptor_(ioc_, tcp::endpoint(asio::ip::address_v4::loopback(), port)), capacity_(capacity),
        guard_(asio::make_work_guard(ioc_)) {
    accept();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  ~Impl() { stop(); }

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

  void stop() {
    if (stopped_.exchange(true)) return;
    auto closed = std::make_shared<std::promise<void>>();
    auto done = closed->get_future();
    asio::post(ioc_, [this, closed] {
      error_code ignored;
      acceptor_.close(ignored);
      auto clients = clients_;
      for (auto& c : clients) c->closeAfterFlush();
      guard_.reset();
      closed->set_value();
    });
    if (!thread_.joinable()) return;
    done.wait_for(std::chrono::seconds(1));
    // Let queued writes drain briefly; sockets still being sniffed would otherwise keep run() alive.
    for (int i = 0; i < 40 && !ioc_.stopped(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    ioc_.stop();
    thread_.join();
  }

  bool waitForClient(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return handshaken_ > 0; });
  }

  std::size_t clientCount() const {
    std::lock_guard lock(mu_);
    return handshaken_;
  }

  void broadcast(const protocol::Message& m) {
    std::string line = protocol::encode(m);
    const bool is_hello = m.as<protocol::Hello>() != nullptr;
    asio::post(ioc_, [this, line = std::move(line), is_hello]() mutable {
      if (is_hello) greeting_ = line;
      for (auto& c : clients_)
        if (c->handshaken) c->send(line);
    });
  }

  bool flush(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      auto pending = std::make_shared<std::promise<std::size_t>>();
      auto fut = pending->get_future();
      asio::post(ioc_, [this, pending] {
        std::size_t n = 0;
        for (auto& c : clients_) n += c->pending();
        pending->set_value(n);
      });
      if (fut.wait_for(std::chrono::milliseconds(500)) == std::future_status::ready && fut.get() == 0) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
  }

  QueuedInputSource& inputs() { return inputs_; }

 private:
  void accept() {
    acceptor_.async_accept([this](error_code ec, tcp::socket socket) {
      if (ec) return;
      auto sock = std::make_shared<tcp::socket>(std::move(socket));
      sniff(sock, std::make_shared<std::array<char, 4>>());
      accept();
    });
  }

  // Peeks at the first bytes to tell a WebSocket upgrade from a raw line stream.
  void sniff(const std::shared_ptr<tcp::socket>& sock, const std::shared_ptr<std::array<char, 4>>& head) {
    sock->async_wait(tcp::socket::wait_read, [this, sock, head](error_code ec) {
      if (ec) return;
      error_code rec;
      const std::size_t n = sock->receive(asio::buffer(*head), tcp::socket::message_peek, rec);
      if (rec || n == 0) return;
      const std::string_view seen(head->data(), n);
      if (n < head->size() && seen.find('\n') == std::string_view::npos && std::string_view("GET ").substr(0, n) == seen) {
        sniff(sock, head);  // need more bytes to decide
        return;
      }
      std::shared_ptr<Client> client;
      auto on_line = [this](const std::shared_ptr<Client>& c, const std::string& line) { handleLine(c, line); };
      auto on_close = [this](const std::shared_ptr<Client>& c) { dropClient(c); };
      if (seen == "GET ")
        client = std::make_shared<WsClient>(std::move(*sock), capacity_, on_line, on_close);
      else
        client = std::make_shared<RawClient>(std::move(*sock), capacity_, on_line, on_close);
      clients_.push_back(client);
      client->start();
    });
  }

  void handleLine(const std::shared_ptr<Client>& c, const std::string& line) {
    protocol::Message m;
    try {
      m = protocol::decode(line);
    } catch (const VersionError&) {
      c->sendAndClose(byeLine("version mismatch"));
      return;
    } catch (const ParseError& e) {
      c->sendAndClose(byeLine(std::string("protocol error: ") + e.what()));
      return;
    }
    if (!c->handshaken) {
      if (!m.as<protocol::Hello>()) {
        c->sendAndClose(byeLine("expected hello"));
        return;
      }
      c->handshaken = true;
      {
        std::lock_guard lock(mu_);
        ++handshaken_;
      }
      cv_.notify_all();
      if (greeting_) c->send(*greeting_);
      return;
    }
    if (const auto* in = m.as<protocol::Input>()) {
      last_input_ = in->sample;
      inputs_.push(in->sample);
    } else if (m.as<protocol::ModeSwitch>()) {
      // a bare switch press must not release the stick
      InputSample s = last_input_;
      s.mode_switch_pressed = true;
      s.grip_toggle_pressed = false;
      inputs_.push(s);
    } else if (m.as<protocol::Bye>()) {
      c->sendAndClose(byeLine("client left"));
    }
  }

  void dropClient(const std::shared_ptr<Client>& c) {
    auto it = std::find(clients_.begin(), clients_.end(), c);
    if (it == clients_.end()) return;
    if (c->handshaken) {
      std::lock_guard lock(mu_);
      --handshaken_;
    }
    clients_.erase(it);
  }

  static std::string byeLine(const std::string& reason) {
    protocol::Message m;
    m.session = "";
    m.payload = protocol::Bye{reason};
    return protocol::encode(m);
  }

  asio::io_context ioc_;
  tcp::acceptor acceptor_;
  std::size_t capacity_;
  asio::executor_work_guard<asio::io_context::executor_type> guard_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};

  // io-thread state
  std::vector<std::shared_ptr<Client>> clients_;
  std::optional<std::string> greeting_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t handshaken_ = 0;
  QueuedInputSource inputs_;
  InputSample last_input_;  // io thread only
};

LiveServer::LiveServer(std::uint16_t port, std::size_t outbound_capacity)
    : impl_(std::make_unique<Impl>(port, outbound_capacity)) {}
LiveServer::~LiveServer() = default;
std::uint16_t LiveServer::port() const { return impl_->port(); }
bool LiveServer::waitForClient(std::chrono::milliseconds timeout) { return impl_->waitForClient(timeout); }
std::size_t LiveServer::clientCount() const { return impl_->clientCount(); }
void LiveServer::broadcast(const protocol::Message& m) { impl_->broadcast(m); }
bool LiveServer::flush(std::chrono::milliseconds timeout) { return impl_->flush(timeout); }
QueuedInputSource& LiveServer::inputs() { return impl_->inputs(); }
void LiveServer::stop() { impl_->stop(); }

}  // namespace cobot::live
