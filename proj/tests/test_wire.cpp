#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <thread>

#include "fedgan/wire.hpp"

using namespace fedgan;

namespace {

std::vector<uint8_t> model_bytes(uint64_t seed) {
  RngStream rng(seed, 0);
  auto g = make_generator(mlp_spec({4, 8, 2}, {Activation::leaky_relu, Activation::linear}), rng);
  return serialize_model(g);
}

}  // namespace

TEST_CASE("upload then fetch over the wire reproduces the payload", "[wire]") {
  ModelRegistry reg;
  wire::RegistryServer server(reg, "127.0.0.1", 0);
  wire::RegistryClient client("127.0.0.1", server.port());

  const auto payload = model_bytes(1);
  CHECK(client.upload("g1", "alice", payload) == 1);
  const ModelEnvelope env = client.fetch_latest("g1");
  CHECK(env.version == 1);
  CHECK(env.payload == payload);
  CHECK(env.verify());

  const auto payload2 = model_bytes(2);
  CHECK(client.upload("g1", "alice", payload2) == 2);
  CHECK(client.fetch("g1", 1).payload == payload);
  CHECK(client.fetch_latest("g1").payload == payload2);
}

TEST_CASE("wire errors carry the right codes", "[wire]") {
  ModelRegistry reg;
  wire::RegistryServer server(reg, "127.0.0.1", 0);
  wire::RegistryClient client("127.0.0.1", server.port());

  try {
    client.fetch_latest("ghost");
    FAIL("expected RegistryError");
  } catch (const RegistryError& e) {
    CHECK(e.code() == RegistryError::Code::not_found);
  }

  auto bad = model_bytes(3);
  bad[20] ^= 0xAA;
  try {
    client.upload("g1", "alice", bad);
    FAIL("expected RegistryError");
  } catch (const RegistryError& e) {
    CHECK(e.code() == RegistryError::Code::invalid_payload);
  }
  CHECK(reg.list().empty());

  // connection still usable after app-level errors
  CHECK(client.upload("g1", "alice", model_bytes(4)) == 1);
}

TEST_CASE("listing over the wire matches the registry", "[wire]") {
  ModelRegistry reg;
  reg.upload("alpha", "x", model_bytes(5));
  reg.upload("alpha", "x", model_bytes(6));
  reg.upload("beta", "y", model_bytes(7));
  wire::RegistryServer server(reg, "127.0.0.1", 0);
  wire::RegistryClient client("127.0.0.1", server.port());
  const auto entries = client.list();
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].model_id == "alpha");
  CHECK(entries[0].max_version == 2);
  CHECK(entries[1].model_id == "beta");
  CHECK(entries[1].max_version == 1);
}

TEST_CASE("unknown message type draws ERR and a close", "[wire]") {
  ModelRegistry reg;
  reg.upload("g1", "x", model_bytes(8));
  wire::RegistryServer server(reg, "127.0.0.1", 0);

  const int fd = wire::detail::tcp_connect("127.0.0.1", server.port());
  wire::detail::send_frame(fd, 0x7E, {1, 2, 3});
  wire::detail::Frame reply;
  REQUIRE(wire::detail::recv_frame(fd, reply));
  CHECK(reply.type == wire::kErr);
  REQUIRE_FALSE(reply.payload.empty());
  CHECK(reply.payload[0] == static_cast<uint8_t>(wire::ErrCode::malformed));
  // server closes after a malformed frame
  CHECK_FALSE(wire::detail::recv_frame(fd, reply));
  ::close(fd);
  CHECK(reg.fetch_latest("g1").version == 1);
}

TEST_CASE("truncated frame leaves the registry unchanged", "[wire]") {
  ModelRegistry reg;
  wire::RegistryServer server(reg, "127.0.0.1", 0);

  const int fd = wire::detail::tcp_connect("127.0.0.1", server.port());
  // declare 100 bytes, deliver 10, vanish
  std::vector<uint8_t> partial{100, 0, 0, 0, wire::kUpload, 1, 'g', 2, 'h', 'i'};
  wire::detail::send_all(fd, partial.data(), partial.size());
  ::close(fd);
  // give the server a moment to observe the dead connection
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK(reg.list().empty());
}

TEST_CASE("oversize frames are rejected with the oversize code", "[wire]") {
  ModelRegistry reg;
  wire::RegistryServer server(reg, "127.0.0.1", 0);

  const int fd = wire::detail::tcp_connect("127.0.0.1", server.port());
  const uint32_t huge = (64u << 20) + 1;
  std::vector<uint8_t> header{static_cast<uint8_t>(huge), static_cast<uint8_t>(huge >> 8),
                              static_cast<uint8_t>(huge >> 16), static_cast<uint8_t>(huge >> 24)};
  wire::detail::send_all(fd, header.data(), header.size());
  wire::detail::Frame reply;
  REQUIRE(wire::detail::recv_frame(fd, reply));
  CHECK(reply.type == wire::kErr);
  REQUIRE_FALSE(reply.payload.empty());
  CHECK(reply.payload[0] == static_cast<uint8_t>(wire::ErrCode::oversize));
  ::close(fd);
}

TEST_CASE("transport transparency: wire results equal in-process results", "[wire]") {
  const auto p1 = model_bytes(9);
  const auto p2 = model_bytes(10);

  auto run_ops = [&](RegistryAccess& access) {
    std::vector<std::string> log;
    log.push_back("v" + std::to_string(access.upload("g1", "a", p1)));
    log.push_back("v" + std::to_string(access.upload("g1", "a", p2)));
    log.push_back("v" + std::to_string(access.upload("g2", "b", p1)));
    const auto env = access.fetch("g1", 1);
    log.push_back(env.payload == p1 ? "payload-ok" : "payload-bad");
    log.push_back("latest" + std::to_string(access.fetch_latest("g1").version));
    for (const auto& e : access.list()) {
      log.push_back(e.model_id + ":" + std::to_string(e.max_version));
    }
    return log;
  };

  ModelRegistry local;
  LocalRegistryAccess local_access(local);
  const auto local_log = run_ops(local_access);

  ModelRegistry served;
  wire::RegistryServer server(served, "127.0.0.1", 0);
  RemoteRegistryAccess remote_access("127.0.0.1", server.port());
  const auto remote_log = run_ops(remote_access);

  CHECK(local_log == remote_log);
}

TEST_CASE("parallel clients get contiguous versions", "[wire]") {
  ModelRegistry reg;
  wire::RegistryServer server(reg, "127.0.0.1", 0);
  const auto payload = model_bytes(11);
  const int n = 16;
  std::vector<uint32_t> versions(static_cast<size_t>(n), 0);
  std::vector<std::thread> workers;
  for (int i = 0; i < n; ++i) {
    workers.emplace_back([&, i] {
      wire::RegistryClient client("127.0.0.1", server.port());
      versions[static_cast<size_t>(i)] = client.upload("shared", "w", payload);
    });
  }
  for (auto& t : workers) t.join();
  std::sort(versions.begin(), versions.end());
  for (int i = 0; i < n; ++i) REQUIRE(versions[static_cast<size_t>(i)] == static_cast<uint32_t>(i + 1));
}

TEST_CASE("endpoint parsing", "[wire]") {
  auto [host, port] = wire::parse_endpoint("127.0.0.1:8080");
  CHECK(host == "127.0.0.1");
  CHECK(port == 8080);
  CHECK_THROWS_AS(wire::parse_endpoint("nohost"), ConfigError);
  CHECK_THROWS_AS(wire::parse_endpoint(":123"), ConfigError);
  CHECK_THROWS_AS(wire::parse_endpoint("h:"), ConfigError);
  CHECK_THROWS_AS(wire::parse_endpoint("h:99999"), ConfigError);
}
