#include "upss/netstore.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "upss/error.hpp"

namespace upss::net {

Bytes encode_frame(std::uint8_t code, ByteView payload) {
  if (payload.size() > kMaxFramePayload) fail(Errc::invalid_argument, "frame payload too large");
  ByteWriter w(kFrameHeaderSize + payload.size());
  w.u32be(static_cast<std::uint32_t>(payload.size()));
  w.u8(code);
  w.raw(payload);
  return std::move(w).take();
}

std::optional<DecodedFrame> decode_frame(ByteView buffer) {
  if (buffer.size() < kFrameHeaderSize) return std::nullopt;
  ByteReader r(buffer);
  auto len = r.u32be();
  if (len > kMaxFramePayload) fail(Errc::malformed, "frame length exceeds limit");
  auto code = r.u8();
  if (r.remaining() < len) return std::nullopt;
  auto payload = r.raw(len);
  return DecodedFrame{Frame{code, Bytes(payload.begin(), payload.end())}, kFrameHeaderSize + len};
}

bool is_known_opcode(std::uint8_t code) {
  switch (static_cast<Opcode>(code)) {
    case Opcode::put:
    case Opcode::get:
    case Opcode::block_size:
    case Opcode::is_persistent:
    case Opcode::head:
    case Opcode::push:
    case Opcode::log:
      return true;
  }
  return false;
}

Endpoint Endpoint::parse(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size())
    fail(Errc::invalid_argument, "endpoint must be host:port, got '" + std::string(text) + "'");
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  if (ep.host.empty()) ep.host = "127.0.0.1";
  unsigned long port = 0;
  for (char c : text.substr(colon + 1)) {
    if (c < '0' || c > '9') fail(Errc::invalid_argument, "invalid port in '" + std::string(text) + "'");
    port = port * 10 + static_cast<unsigned long>(c - '0');
    if (port > 65535) fail(Errc::invalid_argument, "port out of range");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

// ---------------------------------------------------------------------------

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::send_all(ByteView data) {
  std::size_t done = 0;
  while (done < data.size()) {
    auto n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail(Errc::transport, std::string("send failed: ") + std::strerror(errno));
    done += static_cast<std::size_t>(n);
  }
}

void Socket::recv_exact(std::uint8_t* out, std::size_t len) {
  std::size_t done = 0;
  while (done < len) {
    auto n = ::recv(fd_, out + done, len - done, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0) fail(Errc::transport, "connection closed by peer");
    if (n < 0) fail(Errc::transport, std::string("recv failed: ") + std::strerror(errno));
    done += static_cast<std::size_t>(n);
  }
}

namespace {

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    fail(Errc::transport, "cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
  return res;
}

}  // namespace

Socket connect_to(const Endpoint& endpoint) {
  auto* res = resolve(endpoint, false);
  Socket sock(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol));
  if (!sock.valid()) {
    ::freeaddrinfo(res);
    fail(Errc::transport, "socket() failed");
  }
  int rc = ::connect(sock.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0)
    fail(Errc::transport, "cannot connect to " + endpoint.to_string() + ": " + std::strerror(errno));
  int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return sock;
}

void send_frame(Socket& sock, std::uint8_t code, ByteView payload) {
  sock.send_all(encode_frame(code, payload));
}

Frame recv_frame(Socket& sock) {
  std::uint8_t header[kFrameHeaderSize];
  sock.recv_exact(header, sizeof(header));
  ByteReader r({header, sizeof(header)});
  auto len = r.u32be();
  auto code = r.u8();
  if (len > kMaxFramePayload) fail(Errc::malformed, "frame length exceeds limit");
  Frame f{code, Bytes(len)};
  sock.recv_exact(f.payload.data(), len);
  return f;
}

Frame ok_response(Bytes payload) {
  return Frame{static_cast<std::uint8_t>(Status::ok), std::move(payload)};
}

Frame error_response(Status status, std::string_view message) {
  return Frame{static_cast<std::uint8_t>(status), to_bytes(message)};
}

Handler make_store_handler(StorePtr store) {
  return [store = std::move(store)](const Frame& req) -> std::optional<Frame> {
    switch (static_cast<Opcode>(req.code)) {
      case Opcode::put:
        return ok_response(store->put(req.payload).encode());
      case Opcode::get:
        return ok_response(store->get(BlockName::decode(req.payload)));
      case Opcode::block_size: {
        ByteWriter w;
        w.u32be(static_cast<std::uint32_t>(store->block_size()));
        return ok_response(std::move(w).take());
      }
      case Opcode::is_persistent:
        return ok_response(Bytes{static_cast<std::uint8_t>(store->is_persistent() ? 1 : 0)});
      default:
        return std::nullopt;
    }
  };
}

// ---------------------------------------------------------------------------

Server::Server(const Endpoint& listen, std::vector<Handler> handlers)
    : handlers_(std::move(handlers)), host_(listen.host) {
  auto* res = resolve(listen, true);
  listener_ = Socket(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol));
  int one = 1;
  ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  int rc = ::bind(listener_.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 || ::listen(listener_.fd(), 64) != 0)
    fail(Errc::io, "cannot listen on " + listen.to_string() + ": " + std::strerror(errno));
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

Server::~Server() { stop(); }

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::list<Connection> conns;
  {
    std::lock_guard lock(conn_mu_);
    conns.swap(connections_);
  }
  for (auto& c : conns) c.socket->shutdown();
  for (auto& c : conns)
    if (c.thread.joinable()) c.thread.join();
  listener_.close();
}

void Server::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listener_.fd(), POLLIN, 0};
    int rc = ::poll(&pfd, 1, 100);
    if (rc <= 0) continue;
    int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    std::lock_guard lock(conn_mu_);
    connections_.remove_if([](Connection& c) {
      if (!c.done->load()) return false;
      c.thread.join();
      return true;
    });
    Connection conn;
    conn.socket = std::make_shared<Socket>(fd);
    conn.done = std::make_shared<std::atomic<bool>>(false);
    conn.thread = std::thread([this, sock = conn.socket, done = conn.done] {
      serve_connection(*sock);
      done->store(true);
    });
    connections_.push_back(std::move(conn));
  }
}

void Server::serve_connection(Socket& sock) {
  try {
    while (!stopping_) {
      std::uint8_t header[kFrameHeaderSize];
      sock.recv_exact(header, sizeof(header));
      ByteReader r({header, sizeof(header)});
      auto len = r.u32be();
      auto code = r.u8();
      if (len > kMaxFramePayload) {
        // The stream cannot be resynchronized after an oversized header.
        send_frame(sock, static_cast<std::uint8_t>(Status::bad_request),
                   as_bytes("frame length exceeds limit"));
        return;
      }
      Frame req{code, Bytes(len)};
      sock.recv_exact(req.payload.data(), len);
      auto resp = dispatch(req);
      send_frame(sock, resp.code, resp.payload);
    }
  } catch (const std::exception&) {
    // Peer went away or sent garbage; this connection is done.
  }
}

Frame Server::dispatch(const Frame& request) {
  if (!is_known_opcode(request.code))
    return error_response(Status::bad_request, "unknown opcode " + std::to_string(request.code));
  try {
    for (auto& h : handlers_)
      if (auto resp = h(request)) return std::move(*resp);
    return error_response(Status::bad_request, "opcode not served here");
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::not_found:
        return error_response(Status::not_found, e.what());
      case Errc::invalid_argument:
      case Errc::malformed:
      case Errc::unsupported:
      case Errc::out_of_range:
        return error_response(Status::bad_request, e.what());
      default:
        return error_response(Status::server_error, e.what());
    }
  } catch (const std::exception& e) {
    return error_response(Status::server_error, e.what());
  }
}

// ---------------------------------------------------------------------------

Client::Client(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

Socket& Client::socket() {
  if (!sock_.valid()) sock_ = connect_to(endpoint_);
  return sock_;
}

void Client::send(Opcode op, ByteView payload) {
  try {
    send_frame(socket(), static_cast<std::uint8_t>(op), payload);
  } catch (const Error&) {
    sock_.close();
    throw;
  }
}

Frame Client::receive() {
  try {
    return recv_frame(socket());
  } catch (const Error&) {
    sock_.close();
    throw;
  }
}

Frame Client::call(Opcode op, ByteView payload) {
  send(op, payload);
  return receive();
}

void throw_for_status(const Frame& response) {
  auto message = to_string(response.payload);
  switch (static_cast<Status>(response.code)) {
    case Status::not_found:
      fail(Errc::not_found, message.empty() ? "not found" : message);
    case Status::bad_request:
      fail(Errc::invalid_argument, "server rejected request: " + message);
    case Status::server_error:
      fail(Errc::io, "server error: " + message);
    case Status::ok:
      break;
  }
  fail(Errc::malformed, "unknown response status " + std::to_string(response.code));
}

RemoteStore::RemoteStore(Endpoint endpoint) : client_(std::move(endpoint)) {
  auto size = call(Opcode::block_size, {});
  ByteReader r(size.payload);
  block_size_ = r.u32be();
  validate_block_size(block_size_);
  auto pers = call(Opcode::is_persistent, {});
  if (pers.payload.size() != 1) fail(Errc::malformed, "bad IS_PERSISTENT response");
  persistent_ = pers.payload[0] != 0;
}

Frame RemoteStore::call(Opcode op, ByteView payload) {
  std::lock_guard lock(mu_);
  auto resp = client_.call(op, payload);
  if (resp.code != static_cast<std::uint8_t>(Status::ok)) throw_for_status(resp);
  return resp;
}

void RemoteStore::do_put(const BlockName& name, ByteView block) {
  auto resp = call(Opcode::put, block);
  if (BlockName::decode(resp.payload) != name)
    fail(Errc::integrity, "server named block " + name.to_text() + " differently");
}

Bytes RemoteStore::do_get(const BlockName& name) {
  return call(Opcode::get, name.encode()).payload;
}

}  // namespace upss::net
