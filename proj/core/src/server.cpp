#include "coilpilot/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "coilpilot/error.hpp"
#include "coilpilot/protocol.hpp"
#include "coilpilot/replay.hpp"
#include "coilpilot/session.hpp"

namespace coilpilot {

using nlohmann::json;

namespace {

constexpr const char* kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

template <class T>
class Queue {
 public:
  void push(T v) {
    {
      std::lock_guard<std::mutex> lock(m_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  std::deque<T> drain() {
    std::lock_guard<std::mutex> lock(m_);
    std::deque<T> out;
    out.swap(q_);
    return out;
  }
  // Waits until something is queued or the timeout passes.
  void wait(std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(m_);
    cv_.wait_for(lock, timeout, [this] { return !q_.empty(); });
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<T> q_;
};

struct Inbound {
  enum class Kind { kLine, kConnected, kEndOfInput } kind;
  std::string line;
};

// Framing for one socket: raw NDJSON or WebSocket after an HTTP upgrade.
class Framer {
 public:
  enum class Mode { kUnknown, kRaw, kHandshake, kWebSocket };

  // Consumes received bytes; returns complete text messages. `reply` gets
  // protocol bytes to send back (handshake, pong, close).
  std::vector<std::string> feed(const char* data, std::size_t n, std::string& reply, bool& closed) {
    buf_.append(data, n);
    std::vector<std::string> out;
    if (mode_ == Mode::kUnknown) {
      if (buf_.size() < 4) return out;
      mode_ = buf_.compare(0, 4, "GET ") == 0 ? Mode::kHandshake : Mode::kRaw;
    }
    if (mode_ == Mode::kHandshake) {
      const auto end = buf_.find("\r\n\r\n");
      if (end == std::string::npos) return out;
      const std::string head = buf_.substr(0, end);
      buf_.erase(0, end + 4);
      std::string key;
      std::size_t pos = 0;
      while (pos < head.size()) {
        const auto eol = std::min(head.find("\r\n", pos), head.size());
        const std::string line = head.substr(pos, eol - pos);
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
          std::string name = line.substr(0, colon);
          for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          if (name == "sec-websocket-key") {
            key = line.substr(colon + 1);
            key.erase(0, key.find_first_not_of(' '));
            key.erase(key.find_last_not_of(" \r") + 1);
          }
        }
        pos = eol + 2;
      }
      if (key.empty()) {
        reply += "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n";
        closed = true;
        return out;
      }
      reply += "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
               "Sec-WebSocket-Accept: " + websocket_accept_key(key) + "\r\n\r\n";
      mode_ = Mode::kWebSocket;
    }
    if (mode_ == Mode::kRaw) {
      std::size_t nl;
      while ((nl = buf_.find('\n')) != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(std::move(line));
      }
    }
    if (mode_ == Mode::kWebSocket) {
      while (true) {
        if (buf_.size() < 2) break;
        const auto b0 = static_cast<unsigned char>(buf_[0]);
        const auto b1 = static_cast<unsigned char>(buf_[1]);
        const int opcode = b0 & 0x0F;
        const bool masked = (b1 & 0x80) != 0;
        std::uint64_t len = b1 & 0x7F;
        std::size_t header = 2;
        if (len == 126) {
          if (buf_.size() < 4) break;
          len = (static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[2])) << 8) |
                static_cast<unsigned char>(buf_[3]);
          header = 4;
        } else if (len == 127) {
          if (buf_.size() < 10) break;
          len = 0;
          for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(buf_[2 + i]);
          header = 10;
        }
        const std::size_t mask_at = header;
        if (masked) header += 4;
        if (buf_.size() < header + len) break;
        std::string payload = buf_.substr(header, len);
        if (masked) {
          for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= buf_[mask_at + i % 4];
        }
        buf_.erase(0, header + len);
        if (opcode == 0x8) {
          reply += frame(payload, 0x8);
          closed = true;
          break;
        }
        if (opcode == 0x9) {
          reply += frame(payload, 0xA);
          continue;
        }
        if (opcode == 0x1 || opcode == 0x0) {
          fragment_ += payload;
          if (b0 & 0x80) {
            std::size_t start = 0;
            while (start < fragment_.size()) {
              const auto nl = std::min(fragment_.find('\n', start), fragment_.size());
              if (nl > start) out.push_back(fragment_.substr(start, nl - start));
              start = nl + 1;
            }
            fragment_.clear();
          }
        }
      }
    }
    return out;
  }

  // Encodes one outgoing message.
  std::string encode(const std::string& text) const {
    return mode_ == Mode::kWebSocket ? frame(text, 0x1) : text + "\n";
  }
  Mode mode() const { return mode_; }

  static std::string frame(const std::string& payload, int opcode) {
    std::string out;
    out += static_cast<char>(0x80 | opcode);
    const std::size_t n = payload.size();
    if (n < 126) {
      out += static_cast<char>(n);
    } else if (n <= 0xFFFF) {
      out += static_cast<char>(126);
      out += static_cast<char>((n >> 8) & 0xFF);
      out += static_cast<char>(n & 0xFF);
    } else {
      out += static_cast<char>(127);
      for (int i = 7; i >= 0; --i) out += static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF);
    }
    return out + payload;
  }

 private:
  Mode mode_ = Mode::kUnknown;
  std::string buf_;
  std::string fragment_;
};

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN) {
        pollfd p{fd, POLLOUT, 0};
        ::poll(&p, 1, 100);
        continue;
      }
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::string websocket_accept_key(const std::string& client_key) {
  const std::string source = client_key + kWebSocketGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(source.data()), source.size(), digest);
  unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
}

struct SessionServer::Impl {
  Config cfg;
  ServerOptions options;
  int listen_fd = -1;
  int bound_port = 0;
  std::atomic<bool> stopping{false};
  std::atomic<bool> stepper_done{false};
  Queue<Inbound> inbound;
  Queue<std::string> outbound;

  void network_loop();
  void stepper_loop();
};

SessionServer::SessionServer(const Config& cfg, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  cfg.validate();
  impl_->cfg = cfg;
  impl_->options = std::move(options);
}

SessionServer::~SessionServer() {
  stop();
  if (impl_->listen_fd >= 0) ::close(impl_->listen_fd);
}

int SessionServer::port() const { return impl_->bound_port; }

void SessionServer::stop() { impl_->stopping = true; }

int SessionServer::start() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(impl_->options.port));
  if (::inet_pton(AF_INET, impl_->options.host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw Error(ErrorCode::kConfig, "bad host " + impl_->options.host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw Error(ErrorCode::kIo, "cannot listen on port " + std::to_string(impl_->options.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  impl_->listen_fd = fd;
  impl_->bound_port = ntohs(addr.sin_port);
  return impl_->bound_port;
}

void SessionServer::run() {
  if (impl_->listen_fd < 0) start();
  std::thread stepper([this] { impl_->stepper_loop(); });
  impl_->network_loop();
  stepper.join();
}

void SessionServer::Impl::network_loop() {
  int client = -1;
  bool client_reading = false;
  Framer framer;
  std::string pending_out;
  std::deque<std::string> held;
  auto connected_at = std::chrono::steady_clock::now();

  const auto drop_client = [&] {
    if (client >= 0) ::close(client);
    client = -1;
    client_reading = false;
    framer = Framer();
    pending_out.clear();
  };

  while (true) {
    if (stepper_done) {
      // Flush what the stepper produced last, then leave.
      for (auto& msg : outbound.drain()) held.push_back(std::move(msg));
      if (framer.mode() != Framer::Mode::kHandshake) {
        for (auto& msg : held) pending_out += framer.encode(msg);
      }
      if (client >= 0 && !pending_out.empty()) send_all(client, pending_out);
      drop_client();
      break;
    }

    std::vector<pollfd> fds = {{listen_fd, POLLIN, 0}};
    if (client >= 0) fds.push_back({client, static_cast<short>(client_reading ? POLLIN : 0), 0});
    ::poll(fds.data(), fds.size(), 10);

    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd >= 0) {
        if (client >= 0) {
          // One operator at a time; answer in the newcomer's own framing.
          Framer other;
          std::string reply;
          bool closed = false;
          char buf[2048];
          pollfd p{fd, POLLIN, 0};
          if (::poll(&p, 1, 200) > 0) {
            const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
            if (n > 0) other.feed(buf, static_cast<std::size_t>(n), reply, closed);
          }
          const json err = protocol::make_error(0, 0.0, "busy", "another client is connected");
          send_all(fd, reply + other.encode(err.dump()));
          ::close(fd);
        } else {
          const int one = 1;
          ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
          client = fd;
          client_reading = true;
          connected_at = std::chrono::steady_clock::now();
          inbound.push({Inbound::Kind::kConnected, {}});
        }
      }
    }

    if (client >= 0 && fds.size() > 1 && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
      char buf[65536];
      const ssize_t n = ::recv(client, buf, sizeof buf, 0);
      if (n <= 0) {
        // End of the client's input: it may still be reading our output.
        client_reading = false;
        inbound.push({Inbound::Kind::kEndOfInput, {}});
        if (n < 0 || (fds[1].revents & POLLERR)) drop_client();
      } else {
        std::string reply;
        bool closed = false;
        for (auto& line : framer.feed(buf, static_cast<std::size_t>(n), reply, closed)) {
          inbound.push({Inbound::Kind::kLine, std::move(line)});
        }
        if (!reply.empty() && !send_all(client, reply)) drop_client();
        if (closed) {
          inbound.push({Inbound::Kind::kEndOfInput, {}});
          drop_client();
        }
      }
    }

    for (auto& msg : outbound.drain()) held.push_back(std::move(msg));
    if (client < 0) {
      held.clear();
      continue;
    }
    // Output waits until the client's framing is known; a silent client is raw.
    const bool framing_known =
        framer.mode() == Framer::Mode::kRaw || framer.mode() == Framer::Mode::kWebSocket ||
        (framer.mode() == Framer::Mode::kUnknown &&
         std::chrono::steady_clock::now() - connected_at > std::chrono::milliseconds(200));
    if (framing_known && !held.empty()) {
      for (auto& msg : held) pending_out += framer.encode(msg);
      held.clear();
      if (!send_all(client, pending_out)) drop_client();
      pending_out.clear();
    }
  }
}

void SessionServer::Impl::stepper_loop() {
  namespace fs = std::filesystem;
  std::string telemetry_path;
  std::ofstream command_log;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    telemetry_path = (fs::path(options.out_dir) / "telemetry.csv").string();
    command_log.open(fs::path(options.out_dir) / "commands.ndjson", std::ios::binary);
  }
  Session session(cfg, telemetry_path);
  std::int64_t sequence = 0;
  const auto send = [&](std::string_view kind, double t, json payload) {
    outbound.push(protocol::make_message(kind, ++sequence, t, std::move(payload)).dump());
  };
  const auto send_outbound = [&] {
    for (auto& o : session.take_outbound()) send(o.kind, o.sim_time, std::move(o.payload));
  };

  const double scale = cfg.session.time_scale;
  const bool free_run = scale == 0.0;
  bool started = cfg.session.autostart && !free_run;
  bool input_ended = false;
  const std::optional<std::int64_t> end_tick =
      options.duration_s > 0.0
          ? std::optional<std::int64_t>(std::llround(options.duration_s / cfg.session.step_s))
          : std::nullopt;
  using clock = std::chrono::steady_clock;
  clock::time_point wall_start = clock::now();
  std::int64_t tick_start = 0;

  while (!stopping) {
    for (auto& in : inbound.drain()) {
      switch (in.kind) {
        case Inbound::Kind::kConnected:
          send("state", session.time_s(), session.state_payload());
          break;
        case Inbound::Kind::kEndOfInput:
          input_ended = true;
          break;
        case Inbound::Kind::kLine:
          try {
            protocol::Command cmd = protocol::parse_command_line(in.line);
            if (command_log.is_open()) command_log << protocol::to_json(cmd).dump() << '\n';
            session.submit(std::move(cmd));
            if (!started && !free_run) {
              started = true;
              wall_start = clock::now();
              tick_start = session.tick();
            }
          } catch (const Error& e) {
            send("error", session.time_s(), {{"code", std::string(to_string(e.code()))}, {"message", e.what()}});
          }
          break;
      }
    }
    if (free_run && input_ended) started = true;
    if (end_tick && session.tick() >= *end_tick) break;
    if (!started) {
      inbound.wait(std::chrono::milliseconds(10));
      continue;
    }
    if (!free_run) {
      const double elapsed = std::chrono::duration<double>(clock::now() - wall_start).count();
      const auto target = tick_start + static_cast<std::int64_t>(elapsed * scale / cfg.session.step_s);
      if (session.tick() >= target) {
        inbound.wait(std::chrono::milliseconds(1));
        continue;
      }
    }
    session.step();
    send_outbound();
    if (session.broadcast_due()) send("state", session.time_s(), session.state_payload());
  }
  send_outbound();
  session.finish();
  if (command_log.is_open()) command_log.close();
  if (!telemetry_path.empty()) {
    const json summary = replay::replay_file(telemetry_path);
    std::ofstream(fs::path(options.out_dir) / "summary.json", std::ios::binary) << replay::dump_summary(summary);
  }
  stepper_done = true;
}

}  // namespace coilpilot
