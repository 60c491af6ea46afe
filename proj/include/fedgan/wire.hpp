#pragma once

// Framed byte-stream protocol for remote registry access.
//
// Frame:  u32 length (of the rest, little-endian) | u8 type | payload
// Types:
//   0x01 UPLOAD  { u8 id_len, id, u8 creator_len, creator, payload }
//        -> 0x81 OK { u32 version } | 0xFF ERR
//   0x02 FETCH   { u8 id_len, id, u8 selector (0 latest / 1 explicit), u32 version }
//        -> 0x82 ENVELOPE { u32 version, payload } | 0xFF ERR
//   0x03 LIST    {}
//        -> 0x83 LISTING { u32 count, per entry: u8 id_len, id, u32 max_version }
//   0xFF ERR     { u8 code, utf-8 message }
//
// A malformed frame is answered with ERR and the connection is closed.
// Frames larger than 64 MiB are rejected outright.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fedgan/registry.hpp"

namespace fedgan {
namespace wire {

constexpr uint8_t kUpload = 0x01;
constexpr uint8_t kFetch = 0x02;
constexpr uint8_t kList = 0x03;
constexpr uint8_t kOk = 0x81;
constexpr uint8_t kEnvelope = 0x82;
constexpr uint8_t kListing = 0x83;
constexpr uint8_t kErr = 0xFF;

constexpr uint32_t kMaxFrameBytes = 64u << 20;

enum class ErrCode : uint8_t {
  not_found = 1,
  invalid_payload = 2,
  malformed = 3,
  oversize = 4,
  internal = 5,
};

// Frame length field exceeded the cap; distinct so the server can answer
// with the right error code before closing.
class OversizeError : public NetError {
 public:
  explicit OversizeError(const std::string& msg) : NetError(msg) {}
};

namespace detail {

inline void append_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

inline uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline void send_all(int fd, const uint8_t* data, size_t len) {
  size_t sent = 0;
  while (sent < len) {
    const ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError("send failed: " + std::string(std::strerror(errno)));
    }
    sent += static_cast<size_t>(n);
  }
}

// Returns false on clean EOF before the first byte; throws on a mid-buffer cut.
inline bool recv_exact(int fd, uint8_t* data, size_t len) {
  size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError("recv failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) {
      if (got == 0) return false;
      throw NetError("connection closed mid-frame");
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

inline void send_frame(int fd, uint8_t type, const std::vector<uint8_t>& payload) {
  if (payload.size() + 1 > kMaxFrameBytes) throw NetError("frame exceeds 64 MiB cap");
  std::vector<uint8_t> frame;
  frame.reserve(5 + payload.size());
  append_u32(frame, static_cast<uint32_t>(payload.size()) + 1);
  frame.push_back(type);
  frame.insert(frame.end(), payload.begin(), payload.end());
  send_all(fd, frame.data(), frame.size());
}

struct Frame {
  uint8_t type = 0;
  std::vector<uint8_t> payload;
};

// Returns false on clean EOF at a frame boundary.
inline bool recv_frame(int fd, Frame& out) {
  uint8_t header[4];
  if (!recv_exact(fd, header, 4)) return false;
  const uint32_t len = read_u32(header);
  if (len < 1) throw NetError("empty frame");
  if (len > kMaxFrameBytes) throw OversizeError("oversize frame: " + std::to_string(len));
  std::vector<uint8_t> body(len);
  if (!recv_exact(fd, body.data(), len)) throw NetError("connection closed mid-frame");
  out.type = body[0];
  out.payload.assign(body.begin() + 1, body.end());
  return true;
}

class FrameCursor {
 public:
  explicit FrameCursor(const std::vector<uint8_t>& buf) : buf_(buf) {}

  uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  uint32_t u32() {
    need(4);
    const uint32_t v = read_u32(buf_.data() + pos_);
    pos_ += 4;
    return v;
  }
  std::string str(size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(buf_.data()) + pos_, len);
    pos_ += len;
    return s;
  }
  std::vector<uint8_t> rest() {
    std::vector<uint8_t> r(buf_.begin() + static_cast<long>(pos_), buf_.end());
    pos_ = buf_.size();
    return r;
  }
  size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(size_t n) {
    if (buf_.size() - pos_ < n) throw NetError("frame shorter than declared content");
  }
  const std::vector<uint8_t>& buf_;
  size_t pos_ = 0;
};

inline int tcp_connect(const std::string& host, uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError("socket: " + std::string(std::strerror(errno)));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string numeric = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, numeric.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw NetError("bad host address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string msg = std::strerror(errno);
    ::close(fd);
    throw NetError("connect " + host + ":" + std::to_string(port) + ": " + msg);
  }
  return fd;
}

}  // namespace detail

inline std::pair<std::string, uint16_t> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= endpoint.size()) {
    throw ConfigError("endpoint must be host:port, got '" + endpoint + "'");
  }
  const std::string host = endpoint.substr(0, colon);
  unsigned long port = 0;
  try {
    port = std::stoul(endpoint.substr(colon + 1));
  } catch (...) {
    throw ConfigError("bad port in endpoint '" + endpoint + "'");
  }
  if (port > 65535) throw ConfigError("port out of range in '" + endpoint + "'");
  return {host, static_cast<uint16_t>(port)};
}

// Serves a ModelRegistry over TCP. Binds in the constructor (port 0 picks
// an ephemeral port), spawns one thread per connection, joins everything
// on stop().
class RegistryServer {
 public:
  RegistryServer(ModelRegistry& reg, const std::string& host, uint16_t port) : reg_(reg) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw NetError("socket: " + std::string(std::strerror(errno)));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string numeric = host == "localhost" ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, numeric.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd_);
      throw NetError("bad bind address: " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
      const std::string msg = std::strerror(errno);
      ::close(listen_fd_);
      throw NetError("bind/listen " + host + ":" + std::to_string(port) + ": " + msg);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  RegistryServer(const RegistryServer&) = delete;
  RegistryServer& operator=(const RegistryServer&) = delete;

  ~RegistryServer() { stop(); }

  uint16_t port() const { return port_; }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lock(conn_mu_);
      for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
      workers.swap(conn_threads_);
    }
    for (auto& t : workers) {
      if (t.joinable()) t.join();
    }
  }

 private:
  void accept_loop() {
    while (!stopping_.load()) {
      const int conn = ::accept(listen_fd_, nullptr, nullptr);
      if (conn < 0) {
        if (stopping_.load()) break;
        if (errno == EINTR) continue;
        break;
      }
      std::lock_guard<std::mutex> lock(conn_mu_);
      conn_fds_.push_back(conn);
      conn_threads_.emplace_back([this, conn] { serve_connection(conn); });
    }
  }

  void serve_connection(int fd) {
    detail::Frame frame;
    for (;;) {
      try {
        if (!detail::recv_frame(fd, frame)) break;
      } catch (const wire::OversizeError& e) {
        try_send_err(fd, ErrCode::oversize, e.what());
        break;
      } catch (const NetError&) {
        break;  // peer vanished mid-frame; nothing to answer
      }
      if (!dispatch(fd, frame)) break;
    }
    ::close(fd);
  }

  // Returns false when the connection should close.
  bool dispatch(int fd, const detail::Frame& frame) {
    try {
      switch (frame.type) {
        case kUpload: {
          detail::FrameCursor c(frame.payload);
          const std::string id = c.str(c.u8());
          const std::string creator = c.str(c.u8());
          const uint32_t version = reg_.upload(id, creator, c.rest());
          std::vector<uint8_t> out;
          detail::append_u32(out, version);
          detail::send_frame(fd, kOk, out);
          return true;
        }
        case kFetch: {
          detail::FrameCursor c(frame.payload);
          const std::string id = c.str(c.u8());
          const uint8_t selector = c.u8();
          const uint32_t version = c.u32();
          if (selector > 1 || c.remaining() != 0) throw NetError("bad fetch frame");
          const ModelEnvelope env =
              selector == 0 ? reg_.fetch_latest(id) : reg_.fetch(id, version);
          std::vector<uint8_t> out;
          detail::append_u32(out, env.version);
          out.insert(out.end(), env.payload.begin(), env.payload.end());
          detail::send_frame(fd, kEnvelope, out);
          return true;
        }
        case kList: {
          const auto entries = reg_.list();
          std::vector<uint8_t> out;
          detail::append_u32(out, static_cast<uint32_t>(entries.size()));
          for (const auto& e : entries) {
            out.push_back(static_cast<uint8_t>(e.model_id.size()));
            out.insert(out.end(), e.model_id.begin(), e.model_id.end());
            detail::append_u32(out, e.max_version);
          }
          detail::send_frame(fd, kListing, out);
          return true;
        }
        default:
          try_send_err(fd, ErrCode::malformed, "unknown message type");
          return false;
      }
    } catch (const RegistryError& e) {
      // app-level failure: answer and keep the connection usable
      const ErrCode code = e.code() == RegistryError::Code::not_found
                               ? ErrCode::not_found
                               : e.code() == RegistryError::Code::invalid_payload
                                     ? ErrCode::invalid_payload
                                     : ErrCode::internal;
      try_send_err(fd, code, e.what());
      return true;
    } catch (const NetError&) {
      // frame body did not parse: report malformed, then close
      try_send_err(fd, ErrCode::malformed, "malformed frame");
      return false;
    }
  }

  void send_err(int fd, ErrCode code, const std::string& msg) {
    std::vector<uint8_t> out;
    out.push_back(static_cast<uint8_t>(code));
    out.insert(out.end(), msg.begin(), msg.end());
    detail::send_frame(fd, kErr, out);
  }

  void try_send_err(int fd, ErrCode code, const std::string& msg) {
    try {
      send_err(fd, code, msg);
    } catch (const NetError&) {
    }
  }

  ModelRegistry& reg_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::thread acceptor_;
  std::mutex conn_mu_;
  std::vector<std::thread> conn_threads_;
  std::vector<int> conn_fds_;
  std::atomic<bool> stopping_{false};
};

// One connection, sequential request/response. Mirrors the in-process
// registry API; server-side errors come back as the matching exceptions.
class RegistryClient {
 public:
  RegistryClient(const std::string& host, uint16_t port)
      : fd_(detail::tcp_connect(host, port)) {}

  RegistryClient(const RegistryClient&) = delete;
  RegistryClient& operator=(const RegistryClient&) = delete;

  ~RegistryClient() {
    if (fd_ >= 0) ::close(fd_);
  }

  uint32_t upload(const std::string& id, const std::string& creator,
                  const std::vector<uint8_t>& payload) {
    if (id.size() > 255 || creator.size() > 255) {
      throw RegistryError(RegistryError::Code::bad_id, "id/creator too long for the wire");
    }
    std::vector<uint8_t> body;
    body.push_back(static_cast<uint8_t>(id.size()));
    body.insert(body.end(), id.begin(), id.end());
    body.push_back(static_cast<uint8_t>(creator.size()));
    body.insert(body.end(), creator.begin(), creator.end());
    body.insert(body.end(), payload.begin(), payload.end());
    const detail::Frame reply = roundtrip(kUpload, body);
    expect(reply, kOk);
    detail::FrameCursor c(reply.payload);
    return c.u32();
  }

  ModelEnvelope fetch_latest(const std::string& id) { return fetch_impl(id, 0, 0); }
  ModelEnvelope fetch(const std::string& id, uint32_t version) { return fetch_impl(id, 1, version); }

  std::vector<RegistryEntry> list() {
    const detail::Frame reply = roundtrip(kList, {});
    expect(reply, kListing);
    detail::FrameCursor c(reply.payload);
    const uint32_t count = c.u32();
    std::vector<RegistryEntry> entries;
    entries.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
      RegistryEntry e;
      e.model_id = c.str(c.u8());
      e.max_version = c.u32();
      entries.push_back(std::move(e));
    }
    return entries;
  }

 private:
  ModelEnvelope fetch_impl(const std::string& id, uint8_t selector, uint32_t version) {
    if (id.size() > 255) throw RegistryError(RegistryError::Code::bad_id, "id too long");
    std::vector<uint8_t> body;
    body.push_back(static_cast<uint8_t>(id.size()));
    body.insert(body.end(), id.begin(), id.end());
    body.push_back(selector);
    detail::append_u32(body, version);
    const detail::Frame reply = roundtrip(kFetch, body);
    expect(reply, kEnvelope);
    detail::FrameCursor c(reply.payload);
    ModelEnvelope env;
    env.model_id = id;
    env.version = c.u32();
    env.payload = c.rest();
    env.checksum = crc32(env.payload);
    return env;
  }

  detail::Frame roundtrip(uint8_t type, const std::vector<uint8_t>& payload) {
    detail::send_frame(fd_, type, payload);
    detail::Frame reply;
    if (!detail::recv_frame(fd_, reply)) {
      throw NetError("server closed the connection");
    }
    return reply;
  }

  void expect(const detail::Frame& reply, uint8_t type) {
    if (reply.type == type) return;
    if (reply.type == kErr && !reply.payload.empty()) {
      const auto code = static_cast<ErrCode>(reply.payload[0]);
      const std::string msg(reply.payload.begin() + 1, reply.payload.end());
      switch (code) {
        case ErrCode::not_found:
          throw RegistryError(RegistryError::Code::not_found, msg);
        case ErrCode::invalid_payload:
          throw RegistryError(RegistryError::Code::invalid_payload, msg);
        default:
          throw NetError("server error " + std::to_string(reply.payload[0]) + ": " + msg);
      }
    }
    throw NetError("unexpected reply type " + std::to_string(reply.type));
  }

  int fd_;
};

}  // namespace wire

// Remote counterpart of LocalRegistryAccess.
class RemoteRegistryAccess final : public RegistryAccess {
 public:
  RemoteRegistryAccess(const std::string& host, uint16_t port) : client_(host, port) {}

  uint32_t upload(const std::string& id, const std::string& creator,
                  const std::vector<uint8_t>& payload) override {
    return client_.upload(id, creator, payload);
  }
  ModelEnvelope fetch_latest(const std::string& id) override { return client_.fetch_latest(id); }
  ModelEnvelope fetch(const std::string& id, uint32_t version) override {
    return client_.fetch(id, version);
  }
  std::vector<RegistryEntry> list() override { return client_.list(); }

 private:
  wire::RegistryClient client_;
};

}  // namespace fedgan
