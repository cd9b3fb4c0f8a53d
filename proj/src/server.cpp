// Copyright 2026 The streampca Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "streampca/server.hpp"

#include "streampca/tracking.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace streampca {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

// Acks and errors waiting to be written; reading pauses beyond this.
constexpr std::size_t kMaxControlMessages = 16;
constexpr std::uint64_t kMaxBodyBytes = 64ull << 20;

class StreamSession;

// Connection registry and the most recent snapshot. I/O thread only.
class Hub {
 public:
  void publish(std::shared_ptr<const LayoutSnapshot> snapshot);
  void join(const std::shared_ptr<StreamSession>& session);
  void leave(const StreamSession* session);
  void close_all();

  const std::shared_ptr<const LayoutSnapshot>& latest() const { return latest_; }
  const json& latest_json() const { return latest_json_; }
  std::size_t size() const { return sessions_.size(); }

 private:
  std::vector<std::weak_ptr<StreamSession>> sessions_;
  std::shared_ptr<const LayoutSnapshot> latest_;
  json latest_json_;
};

class StreamSession : public std::enable_shared_from_this<StreamSession> {
 public:
  StreamSession(tcp::socket&& socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request,
                     beast::bind_front_handler(&StreamSession::on_accept, shared_from_this()));
  }

  void offer(const std::shared_ptr<const LayoutSnapshot>& snapshot) {
    if (!snapshot || closed_) return;
    pending_ = snapshot;
    pump();
  }

  void close() {
    closed_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    hub_.join(shared_from_this());
    offer(hub_.latest());  // late joiners start from the current frame
    read();
  }

  void read() {
    ws_.async_read(in_, beast::bind_front_handler(&StreamSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    const std::string text = beast::buffers_to_string(in_.data());
    in_.consume(in_.size());
    handle(text);
    if (control_.size() < kMaxControlMessages) {
      read();
    } else {
      read_paused_ = true;
    }
    pump();
  }

  void handle(const std::string& text) {
    const std::uint64_t seq = hub_.latest() ? hub_.latest()->seq : 0;
    auto error = [&](const std::string& message) {
      control_.push_back(json{{"kind", "error"}, {"seq", seq}, {"message", message}}.dump());
    };
    json message;
    try {
      message = json::parse(text);
    } catch (const json::exception&) {
      error("message is not valid JSON");
      return;
    }
    if (!message.is_object() || !message.contains("kind") || !message["kind"].is_string()) {
      error("message needs a string \"kind\"");
      return;
    }
    if (message["kind"] != "select") {
      error("unsupported message kind '" + message["kind"].get<std::string>() + "'");
      return;
    }
    const auto mode_field = message.value("mode", json());
    const auto mode = mode_field.is_string()
                          ? parse_tracking_mode(mode_field.get<std::string>())
                          : std::nullopt;
    if (!mode) {
      error("select needs mode new-points, selected-points, both or off");
      return;
    }
    std::vector<std::string> ids;
    if (message.contains("ids")) {
      const json& list = message["ids"];
      if (!list.is_array() ||
          !std::all_of(list.begin(), list.end(), [](const json& v) { return v.is_string(); })) {
        error("select ids must be an array of strings");
        return;
      }
      ids = list.get<std::vector<std::string>>();
    }
    std::uint64_t issued = seq;
    if (message.contains("seq") && message["seq"].is_number_unsigned()) {
      issued = message["seq"].get<std::uint64_t>();
    }

    SelectionResult result = resolve_selection(*mode, std::move(ids), issued, hub_.latest().get());
    if (result.error) {
      control_.push_back(json{{"kind", "error"},
                              {"seq", issued},
                              {"message", *result.error},
                              {"pruned", result.pruned}}
                             .dump());
      return;
    }
    selection_ = std::move(result.selection);
    control_.push_back(json{{"kind", "ack"},
                            {"seq", selection_.issued_seq},
                            {"mode", std::string(to_string(selection_.mode))},
                            {"ids", selection_.ids},
                            {"pruned", result.pruned}}
                           .dump());
    // Resend the current frame so the new focus shows without waiting for data.
    if (hub_.latest()) {
      pending_ = hub_.latest();
      refresh_ = true;
    }
  }

  std::string render(const LayoutSnapshot& snapshot) const {
    json message = hub_.latest().get() == &snapshot ? hub_.latest_json() : to_json(snapshot);
    message["kind"] = "snapshot";
    message["focus"] = focus_json(focus_rect(snapshot, selection_));
    return message.dump();
  }

  void pump() {
    if (writing_ || closed_) return;
    if (!control_.empty()) {
      out_ = std::move(control_.front());
      control_.pop_front();
    } else if (pending_ && (pending_->seq > last_seq_ || refresh_)) {
      out_ = render(*pending_);
      last_seq_ = pending_->seq;
      pending_.reset();
      refresh_ = false;
    } else {
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(out_),
                    beast::bind_front_handler(&StreamSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      finish();
      return;
    }
    if (read_paused_ && control_.size() < kMaxControlMessages) {
      read_paused_ = false;
      read();
    }
    pump();
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    hub_.leave(this);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer in_;
  std::string out_;
  std::deque<std::string> control_;
  std::shared_ptr<const LayoutSnapshot> pending_;
  std::uint64_t last_seq_ = 0;
  TrackingSelection selection_;
  bool writing_ = false;
  bool read_paused_ = false;
  bool refresh_ = false;  // resend last_seq_ once, with the new focus
  bool closed_ = false;
};

void Hub::publish(std::shared_ptr<const LayoutSnapshot> snapshot) {
  latest_ = std::move(snapshot);
  latest_json_ = to_json(*latest_);
  std::vector<std::shared_ptr<StreamSession>> live;
  live.reserve(sessions_.size());
  std::erase_if(sessions_, [](const auto& weak) { return weak.expired(); });
  for (const auto& weak : sessions_) {
    if (auto session = weak.lock()) live.push_back(std::move(session));
  }
  for (const auto& session : live) session->offer(latest_);
}

void Hub::join(const std::shared_ptr<StreamSession>& session) { sessions_.push_back(session); }

void Hub::leave(const StreamSession* session) {
  std::erase_if(sessions_, [session](const auto& weak) {
    const auto locked = weak.lock();
    return !locked || locked.get() == session;
  });
}

void Hub::close_all() {
  for (const auto& weak : sessions_) {
    if (auto session = weak.lock()) session->close();
  }
  sessions_.clear();
}

}  // namespace

struct Server::Impl {
  explicit Impl(ServerOptions opts)
      : options(std::move(opts)), pipeline(options.pipeline), acceptor(ioc) {}

  ServerOptions options;
  Pipeline pipeline;  // writer thread only

  net::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  std::thread io_thread;
  std::thread writer;
  std::atomic<std::size_t> session_count{0};

  mutable std::mutex mutex;
  mutable std::condition_variable wake;      // writer: new events or stop
  mutable std::condition_variable progress;  // observers: events processed / published
  std::deque<StreamEvent> live;
  bool stopping = false;
  bool started = false;
  std::uint64_t processed = 0;
  std::uint64_t emitted = 0;
  std::uint64_t published = 0;
  std::shared_ptr<const LayoutSnapshot> latest;

  void open() {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void accept();
  void serve_http(tcp::socket socket);
  http::response<http::string_body> respond(const http::request<http::string_body>& request);
  void writer_loop();
  void ingest(const StreamEvent& event);
};

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Server::Impl& server)
      : stream_(std::move(socket)), server_(server) {}

  void run() { read(); }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(kMaxBodyBytes);
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, *parser_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    http::request<http::string_body> request = parser_->release();
    if (websocket::is_upgrade(request)) {
      if (request.target() == "/stream") {
        stream_.expires_never();
        std::make_shared<StreamSession>(stream_.release_socket(), server_.hub)
            ->start(std::move(request));
        return;
      }
    }
    response_ = std::make_shared<http::response<http::string_body>>(server_.respond(request));
    http::async_write(stream_, *response_,
                      beast::bind_front_handler(&HttpSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (response_->need_eof()) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    read();
  }

  beast::tcp_stream stream_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  std::shared_ptr<http::response<http::string_body>> response_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
      if (!acceptor.is_open()) return;
    } else {
      serve_http(std::move(socket));
    }
    accept();
  });
}

void Server::Impl::serve_http(tcp::socket socket) {
  std::make_shared<HttpSession>(std::move(socket), *this)->run();
}

http::response<http::string_body> Server::Impl::respond(
    const http::request<http::string_body>& request) {
  http::response<http::string_body> res{http::status::ok, request.version()};
  res.set(http::field::content_type, "application/json");
  res.keep_alive(request.keep_alive());
  auto reply = [&](http::status status, const json& body) {
    res.result(status);
    res.body() = body.dump();
    res.prepare_payload();
    return res;
  };

  const auto target = request.target();
  if (target == "/healthz") {
    if (request.method() != http::verb::get) {
      return reply(http::status::method_not_allowed, {{"error", "use GET"}});
    }
    const auto& latest = hub.latest();
    return reply(http::status::ok, {{"seq", latest ? latest->seq : 0},
                                    {"stored", latest ? latest->stored : 0},
                                    {"sessions", hub.size()}});
  }
  if (target == "/events") {
    if (request.method() != http::verb::post) {
      return reply(http::status::method_not_allowed, {{"error", "use POST"}});
    }
    std::istringstream body(request.body());
    ReadResult parsed = read_events(body);
    const std::size_t accepted = parsed.events.size();
    {
      std::lock_guard lock(mutex);
      if (live.size() + accepted > options.max_queued_events) {
        return reply(http::status::service_unavailable,
                     {{"error", "event queue is full"}, {"accepted", 0}});
      }
      for (StreamEvent& e : parsed.events) live.push_back(std::move(e));
    }
    wake.notify_all();
    return reply(http::status::accepted, {{"accepted", accepted}, {"errors", parsed.errors}});
  }
  if (target == "/stream") {
    return reply(http::status::upgrade_required, {{"error", "/stream is a WebSocket endpoint"}});
  }
  return reply(http::status::not_found, {{"error", "no such endpoint"}});
}

void Server::Impl::ingest(const StreamEvent& event) {
  std::shared_ptr<const LayoutSnapshot> snapshot;
  try {
    snapshot = pipeline.ingest(event);
  } catch (const RejectedEvent& e) {
    spdlog::warn("skipping event: {}", e.what());
  } catch (const std::exception& e) {
    spdlog::error("event '{}' failed: {}", event.id, e.what());
  }
  std::lock_guard lock(mutex);
  ++processed;
  if (snapshot) {
    latest = snapshot;
    ++emitted;
    net::post(ioc, [this, snapshot] {
      hub.publish(snapshot);
      {
        std::lock_guard inner(mutex);
        ++published;
      }
      progress.notify_all();
    });
  }
  progress.notify_all();
}

void Server::Impl::writer_loop() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::size_t next = 0;
  std::unique_lock lock(mutex);
  while (!stopping) {
    std::optional<StreamEvent> event;
    if (!live.empty()) {
      event = std::move(live.front());
      live.pop_front();
    } else if (next < options.replay.size()) {
      if (options.rate > 0.0) {
        const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(next / options.rate));
        if (Clock::now() < due) {
          wake.wait_until(lock, due);
          continue;
        }
      }
      event = options.replay[next++];
    } else {
      wake.wait(lock);
      continue;
    }
    lock.unlock();
    ingest(*event);
    lock.lock();
  }
}

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->open();
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->started) return;
    impl_->started = true;
  }
  impl_->accept();
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
  impl_->writer = std::thread([this] { impl_->writer_loop(); });
  spdlog::info("listening on {}:{}", impl_->options.address, port());
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopping) return;
    impl_->stopping = true;
  }
  impl_->wake.notify_all();
  if (impl_->writer.joinable()) impl_->writer.join();
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->hub.close_all();
  });
  if (impl_->io_thread.joinable()) {
    // Give sockets a moment to close, then stop whatever is left.
    auto guard = std::thread([this] {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      impl_->ioc.stop();
    });
    impl_->io_thread.join();
    guard.join();
  }
}

void Server::run() {
  net::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  std::atomic<bool> signalled{false};
  signals.async_wait([&](beast::error_code ec, int) {
    if (!ec) signalled = true;
    std::lock_guard lock(impl_->mutex);
    impl_->progress.notify_all();
  });
  start();
  {
    std::unique_lock lock(impl_->mutex);
    impl_->progress.wait(lock, [&] { return signalled.load() || impl_->stopping; });
  }
  spdlog::info("shutting down");
  stop();
}

bool Server::submit(std::vector<StreamEvent> events) {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->live.size() + events.size() > impl_->options.max_queued_events) return false;
    for (StreamEvent& e : events) impl_->live.push_back(std::move(e));
  }
  impl_->wake.notify_all();
  return true;
}

std::shared_ptr<const LayoutSnapshot> Server::latest() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->latest;
}

std::uint64_t Server::processed_events() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->processed;
}

bool Server::wait_for_processed(std::uint64_t count, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->mutex);
  return impl_->progress.wait_for(lock, timeout, [&] { return impl_->processed >= count; });
}

bool Server::wait_for_published(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->mutex);
  return impl_->progress.wait_for(lock, timeout,
                                  [&] { return impl_->published >= impl_->emitted; });
}

std::size_t Server::sessions() const {
  std::promise<std::size_t> count;
  auto future = count.get_future();
  net::post(impl_->ioc, [&] { count.set_value(impl_->hub.size()); });
  if (future.wait_for(std::chrono::seconds(2)) != std::future_status::ready) return 0;
  return future.get();
}

}  // namespace streampca
