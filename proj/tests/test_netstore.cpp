#include <gtest/gtest.h>

#include <thread>

#include "test_util.hpp"
#include "upss/crypto.hpp"
#include "upss/netstore.hpp"

using namespace upss;
using namespace upss::net;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::io;
}

struct Served {
  std::shared_ptr<MemoryStore> backing = std::make_shared<MemoryStore>();
  Server server{Endpoint{"127.0.0.1", 0}, {make_store_handler(backing)}};
};

}  // namespace

TEST(Frame, EncodeLayout) {
  auto f = encode_frame(0x02, as_bytes("abc"));
  EXPECT_EQ(to_hex(f), "0000000302616263");
}

TEST(Frame, PartialAndOversized) {
  auto f = encode_frame(0x01, Bytes(10, 7));
  for (std::size_t cut = 0; cut < f.size(); ++cut)
    EXPECT_FALSE(decode_frame(ByteView(f).first(cut)).has_value());
  auto d = decode_frame(f);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->consumed, f.size());
  EXPECT_EQ(d->frame.payload, Bytes(10, 7));
  Bytes huge{0xff, 0xff, 0xff, 0xff, 0x01};
  EXPECT_EQ(code_of([&] { decode_frame(huge); }), Errc::malformed);
}

TEST(Frame, RoundTripFuzz) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    Frame frame{static_cast<std::uint8_t>(rng()), test::random_bytes(rng, rng() % 300)};
    auto enc = encode_frame(frame.code, frame.payload);
    enc.push_back(0x99);  // trailing bytes belong to the next frame
    auto d = decode_frame(enc);
    ASSERT_TRUE(d);
    EXPECT_EQ(d->frame, frame);
    EXPECT_EQ(d->consumed, enc.size() - 1);
  }
  for (int i = 0; i < 2000; ++i) {
    auto junk = test::random_bytes(rng, rng() % 64);
    try {
      decode_frame(junk);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::malformed);
    }
  }
}

TEST(Endpoint, Parse) {
  auto e = Endpoint::parse("example.org:7000");
  EXPECT_EQ(e.host, "example.org");
  EXPECT_EQ(e.port, 7000);
  EXPECT_EQ(e.to_string(), "example.org:7000");
  EXPECT_EQ(code_of([] { Endpoint::parse("nohost"); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([] { Endpoint::parse("h:99999"); }), Errc::invalid_argument);
}

TEST(Protocol, RawOpcodes) {
  Served s;
  Client c(s.server.endpoint());
  auto sealed = seal(as_bytes("wire"));

  auto put = c.call(Opcode::put, sealed.block);
  ASSERT_EQ(put.code, static_cast<std::uint8_t>(Status::ok));
  EXPECT_EQ(put.payload, sealed.pointer.name.encode());

  auto get = c.call(Opcode::get, sealed.pointer.name.encode());
  ASSERT_EQ(get.code, static_cast<std::uint8_t>(Status::ok));
  EXPECT_EQ(get.payload, sealed.block);

  auto missing = c.call(Opcode::get, seal(as_bytes("absent")).pointer.name.encode());
  EXPECT_EQ(missing.code, static_cast<std::uint8_t>(Status::not_found));

  auto wrong = c.call(Opcode::put, Bytes(3000, 1));
  EXPECT_EQ(wrong.code, static_cast<std::uint8_t>(Status::bad_request));

  auto bs = c.call(Opcode::block_size, {});
  EXPECT_EQ(to_hex(bs.payload), "00001000");
  auto persistent = c.call(Opcode::is_persistent, {});
  EXPECT_EQ(to_hex(persistent.payload), "00");

  auto unknown = c.call(static_cast<Opcode>(0x7f), {});
  EXPECT_EQ(unknown.code, static_cast<std::uint8_t>(Status::bad_request));
}

TEST(Protocol, Pipelining) {
  Served s;
  Client c(s.server.endpoint());
  std::vector<SealedBlock> blocks;
  for (int i = 0; i < 20; ++i) blocks.push_back(seal(as_bytes("pipe" + std::to_string(i))));
  for (auto& b : blocks) c.send(Opcode::put, b.block);
  for (auto& b : blocks) EXPECT_EQ(c.receive().payload, b.pointer.name.encode());
  for (auto& b : blocks) c.send(Opcode::get, b.pointer.name.encode());
  for (auto& b : blocks) EXPECT_EQ(c.receive().payload, b.block);
}

TEST(RemoteStore, MatchesLocalStore) {
  Served s;
  RemoteStore remote(s.server.endpoint());
  MemoryStore local;
  EXPECT_EQ(remote.block_size(), 4096u);
  EXPECT_FALSE(remote.is_persistent());
  std::mt19937_64 rng(3);
  std::vector<BlockName> names;
  for (int i = 0; i < 1000; ++i) {
    auto block = seal(test::random_bytes(rng, 64)).block;
    auto n = remote.put(block);
    ASSERT_EQ(n, local.put(block));
    names.push_back(n);
  }
  for (const auto& n : names) ASSERT_EQ(remote.get(n), local.get(n));
  auto absent = seal(as_bytes("absent")).pointer.name;
  EXPECT_EQ(code_of([&] { remote.get(absent); }), Errc::not_found);
  EXPECT_FALSE(remote.contains(absent));
  EXPECT_TRUE(remote.contains(names.front()));
  EXPECT_EQ(code_of([&] { remote.put(Bytes(100, 0)); }), Errc::invalid_argument);
}

TEST(RemoteStore, ConcurrentClients) {
  Served s;
  std::vector<std::thread> threads;
  std::atomic<int> bad{0};
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      RemoteStore remote(s.server.endpoint());
      std::mt19937_64 rng(t);
      for (int i = 0; i < 50; ++i) {
        auto block = seal(test::random_bytes(rng, 32)).block;
        if (remote.get(remote.put(block)) != block) ++bad;
      }
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(bad, 0);
  EXPECT_EQ(s.backing->block_count(), 400u);
}

TEST(RemoteStore, ByzantineServerIsDetected) {
  auto backing = std::make_shared<MemoryStore>();
  auto honest = make_store_handler(backing);
  std::atomic<int> mode{0};
  Handler liar = [&](const Frame& req) -> std::optional<Frame> {
    auto resp = honest(req);
    if (!resp || resp->code != 0) return resp;
    if (req.code == static_cast<std::uint8_t>(Opcode::get) && mode == 1) resp->payload[100] ^= 1;
    if (req.code == static_cast<std::uint8_t>(Opcode::get) && mode == 2)
      resp->payload = seal(as_bytes("substitute")).block;
    if (req.code == static_cast<std::uint8_t>(Opcode::put) && mode == 3)
      resp->payload = seal(as_bytes("other")).pointer.name.encode();
    return resp;
  };
  Server server({"127.0.0.1", 0}, {liar});
  RemoteStore remote(server.endpoint());
  auto sealed = seal(as_bytes("target"));
  remote.put(sealed.block);
  mode = 1;
  EXPECT_EQ(code_of([&] { remote.get(sealed.pointer.name); }), Errc::integrity);
  mode = 2;
  EXPECT_EQ(code_of([&] { remote.get(sealed.pointer.name); }), Errc::integrity);
  mode = 3;
  EXPECT_EQ(code_of([&] { remote.put(seal(as_bytes("next")).block); }), Errc::integrity);
  mode = 0;
  EXPECT_EQ(remote.get(sealed.pointer.name), sealed.block);
}

TEST(RemoteStore, ServerGoneIsTransportError) {
  auto s = std::make_unique<Served>();
  RemoteStore remote(s->server.endpoint());
  auto ep = s->server.endpoint();
  s.reset();
  EXPECT_EQ(code_of([&] { remote.get(seal(as_bytes("x")).pointer.name); }), Errc::transport);
  EXPECT_EQ(code_of([&] { RemoteStore again(ep); }), Errc::transport);
}
