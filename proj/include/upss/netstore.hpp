#pragma once

// Binary request/response protocol for exposing a block store over TCP.
//
// Request:  [u32 BE payload length][u8 opcode][payload]
// Response: [u32 BE payload length][u8 status][payload]
//
// PUT           payload = block             -> OK, encoded name
// GET           payload = encoded name      -> OK, block | NOT_FOUND
// BLOCK_SIZE    payload = empty             -> OK, u32 BE
// IS_PERSISTENT payload = empty             -> OK, u8 (0 or 1)
//
// Error responses may carry a UTF-8 message. Each connection handles one
// frame at a time; clients may pipeline and get responses in request order.

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "upss/blockstore.hpp"

namespace upss::net {

enum class Opcode : std::uint8_t {
  put = 0x01,
  get = 0x02,
  block_size = 0x03,
  is_persistent = 0x04,
  // Repository service, see uvc.hpp.
  head = 0x10,
  push = 0x11,
  log = 0x12,
};

enum class Status : std::uint8_t {
  ok = 0x00,
  not_found = 0x01,
  bad_request = 0x02,
  server_error = 0x03,
};

inline constexpr std::size_t kFrameHeaderSize = 5;
inline constexpr std::uint32_t kMaxFramePayload = 64u << 20;

/// A request (code = opcode) or response (code = status).
struct Frame {
  std::uint8_t code = 0;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

Bytes encode_frame(std::uint8_t code, ByteView payload);

struct DecodedFrame {
  Frame frame;
  std::size_t consumed = 0;
};

/// Decodes one frame from the front of `buffer`. Returns nullopt when more
/// bytes are needed; throws Errc::malformed on an oversized length.
std::optional<DecodedFrame> decode_frame(ByteView buffer);

bool is_known_opcode(std::uint8_t code);

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Parses `host:port`.
  static Endpoint parse(std::string_view text);
  std::string to_string() const;
};

/// Owns a socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  void shutdown();

  /// Both throw Errc::transport on failure or a closed peer.
  void send_all(ByteView data);
  void recv_exact(std::uint8_t* out, std::size_t len);

 private:
  int fd_ = -1;
};

Socket connect_to(const Endpoint& endpoint);
void send_frame(Socket& sock, std::uint8_t code, ByteView payload);
Frame recv_frame(Socket& sock);

/// Returns a response for requests it recognizes and nullopt otherwise.
using Handler = std::function<std::optional<Frame>(const Frame& request)>;

/// Serves the block-store opcodes from `store`.
Handler make_store_handler(StorePtr store);

Frame ok_response(Bytes payload = {});
Frame error_response(Status status, std::string_view message);

/// Multi-connection TCP server. Handlers are consulted in order; a request
/// no handler claims gets BAD_REQUEST.
class Server {
 public:
  Server(const Endpoint& listen, std::vector<Handler> handlers);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// The bound port (useful when listening on port 0).
  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }
  void stop();

 private:
  struct Connection {
    std::thread thread;
    std::shared_ptr<Socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop();
  void serve_connection(Socket& sock);
  Frame dispatch(const Frame& request);

  std::vector<Handler> handlers_;
  Socket listener_;
  std::string host_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conn_mu_;
  std::list<Connection> connections_;
};

/// A single client connection. Not safe for concurrent use on its own.
class Client {
 public:
  explicit Client(Endpoint endpoint);

  /// Sends one request and waits for its response. A broken connection is
  /// reported as Errc::transport and re-established on the next call.
  Frame call(Opcode op, ByteView payload);

  void send(Opcode op, ByteView payload);
  Frame receive();

  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Socket& socket();

  Endpoint endpoint_;
  Socket sock_;
};

/// Raises the library error matching a non-OK response.
[[noreturn]] void throw_for_status(const Frame& response);

/// Block store backed by a remote server. Calls are serialized over one
/// connection; the integrity check in BlockStore::get covers every block the
/// server returns, and put checks the server's name against the local hash.
class RemoteStore final : public BlockStore {
 public:
  explicit RemoteStore(Endpoint endpoint);

  std::size_t block_size() const override { return block_size_; }
  bool is_persistent() const override { return persistent_; }

 protected:
  void do_put(const BlockName& name, ByteView block) override;
  Bytes do_get(const BlockName& name) override;

 private:
  Frame call(Opcode op, ByteView payload);

  std::mutex mu_;
  Client client_;
  std::size_t block_size_ = 0;
  bool persistent_ = false;
};

}  // namespace upss::net
