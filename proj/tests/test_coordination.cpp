#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "armstack/coordination/client.hpp"
#include "armstack/coordination/host.hpp"
#include "armstack/coordination/message.hpp"
#include "armstack/coordination/simnet.hpp"
#include "armstack/coordination/tcp.hpp"

using namespace armstack;
using namespace armstack::coordination;

namespace {

bool same_messages(const std::vector<Message>& a,
                   const std::vector<Message>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].type != b[i].type || a[i].seq != b[i].seq ||
        a[i].payload != b[i].payload) {
      return false;
    }
  }
  return true;
}

// Host plus N clients wired through a simulated network. Outbound frames
// are flushed into the net right after each core touch, mirroring what the
// socket transports do.
struct SimCluster {
  explicit SimCluster(int n_clients, const SimNetConfig& config,
                      const std::vector<double>& clock_offsets = {})
      : net(config), host() {
    const int host_node = net.add_node(
        [this](int conn, const std::string& bytes, double now) {
          host.on_bytes(conn, bytes, now);
          flush_host();
        });
    for (int i = 0; i < n_clients; ++i) {
      clients.push_back(
          std::make_unique<ClientCore>("client" + std::to_string(i + 1)));
      const double offset =
          i < static_cast<int>(clock_offsets.size()) ? clock_offsets[i] : 0.0;
      ClientCore* core = clients.back().get();
      const int node = net.add_node(
          [this, core, i](int, const std::string& bytes, double now) {
            core->on_bytes(bytes, now);
            flush_client(i);
          },
          offset);
      client_nodes.push_back(node);
      auto [host_conn, client_conn] = net.connect(host_node, node);
      host_conns.push_back(host_conn);
      client_conns.push_back(client_conn);
      host.on_connect(host_conn);
    }
  }

  void flush_host() {
    for (auto& [conn, bytes] : host.take_outbound()) {
      if (!dead_conns.count(conn)) net.send(conn, bytes);
    }
  }

  void flush_client(int i) {
    const std::string bytes = clients[i]->take_outbound();
    if (!bytes.empty()) net.send(client_conns[i], bytes);
  }

  void handshake_all() {
    for (std::size_t i = 0; i < clients.size(); ++i) {
      clients[i]->hello();
      clients[i]->register_arm("arm" + std::to_string(i + 1));
      flush_client(static_cast<int>(i));
    }
    net.run_until_idle();
  }

  SimNet net;
  HostCore host;
  std::vector<std::unique_ptr<ClientCore>> clients;
  std::vector<int> client_nodes;
  std::vector<int> host_conns;
  std::vector<int> client_conns;
  std::set<int> dead_conns;
};

}  // namespace

TEST_CASE("frames survive an encode decode round trip") {
  std::vector<Message> sent;
  sent.push_back({MessageType::kHello, 1, "v=1\nname=c\n"});
  sent.push_back({MessageType::kEstop, 2, ""});
  sent.push_back({MessageType::kTrajLoad, 3, std::string(100000, 'x')});
  std::string stream;
  for (const auto& m : sent) stream += encode(m);

  FrameParser parser;
  std::vector<Message> got;
  REQUIRE(parser.feed(stream, got));
  CHECK(same_messages(sent, got));
  CHECK(parser.buffered() == 0);
}

TEST_CASE("chunking never changes the decoded message sequence") {
  std::mt19937_64 rng(4242);
  std::vector<Message> sent;
  std::string stream;
  for (int i = 0; i < 60; ++i) {
    Message m;
    m.type = static_cast<MessageType>(1 + rng() % 11);
    m.seq = static_cast<uint32_t>(rng());
    const std::size_t len = rng() % 300;
    m.payload.resize(len);
    for (auto& c : m.payload) c = static_cast<char>(rng());
    stream += encode(m);
    sent.push_back(std::move(m));
  }

  for (int trial = 0; trial < 300; ++trial) {
    FrameParser parser;
    std::vector<Message> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t n =
          std::min<std::size_t>(1 + rng() % 97, stream.size() - pos);
      REQUIRE(parser.feed(std::string_view(stream).substr(pos, n), got));
      pos += n;
    }
    REQUIRE(same_messages(sent, got));
  }

  // One byte at a time.
  FrameParser parser;
  std::vector<Message> got;
  for (char c : stream) parser.feed(std::string_view(&c, 1), got);
  CHECK(same_messages(sent, got));
}

TEST_CASE("corrupt streams are refused rather than misparsed") {
  {
    FrameParser parser;
    std::vector<Message> got;
    std::string huge = "\x7f\xff\xff\xff";
    CHECK_FALSE(parser.feed(huge, got));
    CHECK(parser.error().find("length") != std::string::npos);
  }
  {
    FrameParser parser;
    std::vector<Message> got;
    std::string tiny("\x00\x00\x00\x02xx", 6);
    CHECK_FALSE(parser.feed(tiny, got));
  }
  {
    FrameParser parser;
    std::vector<Message> got;
    Message m{MessageType::kAck, 9, ""};
    std::string frame = encode(m);
    frame[4] = 99;  // not a known type
    CHECK_FALSE(parser.feed(frame, got));
    CHECK(got.empty());
    // A poisoned parser stays refused.
    CHECK_FALSE(parser.feed(encode(m), got));
  }
}

TEST_CASE("random garbage never decodes and never crashes") {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 500; ++trial) {
    FrameParser parser;
    std::vector<Message> got;
    std::string junk(1 + rng() % 256, '\0');
    for (auto& c : junk) c = static_cast<char>(rng());
    parser.feed(junk, got);  // must simply terminate
    CHECK(parser.buffered() <= kMaxFrameBytes);
  }
}

TEST_CASE("handshake and registration populate the session table") {
  SimCluster cluster(2, {.latency = 0.001, .jitter = 0.0, .seed = 3});
  cluster.handshake_all();

  REQUIRE(cluster.host.clients().size() == 2);
  CHECK(cluster.host.clients().at(cluster.host_conns[0]).name == "client1");
  CHECK(cluster.host.conn_for_arm("arm1") == cluster.host_conns[0]);
  CHECK(cluster.host.conn_for_arm("arm2") == cluster.host_conns[1]);
  CHECK(cluster.clients[0]->handshake_done());
  CHECK(cluster.clients[0]->host_name() == "host");

  // A second claim on a registered arm is refused.
  cluster.clients[1]->register_arm("arm1");
  cluster.flush_client(1);
  cluster.net.run_until_idle();
  CHECK(cluster.clients[1]->last_error().find("duplicate") !=
        std::string::npos);
  CHECK(cluster.host.conn_for_arm("arm1") == cluster.host_conns[0]);
}

TEST_CASE("parameters set by one client are visible to all") {
  SimCluster cluster(2, {.latency = 0.002, .jitter = 0.0, .seed = 5});
  cluster.handshake_all();

  cluster.clients[0]->set_param("mounts/m1/pose", "0 0 0.8 1 0 0 0");
  cluster.flush_client(0);
  cluster.net.run_until_idle();
  CHECK(cluster.host.params().at("mounts/m1/pose") == "0 0 0.8 1 0 0 0");
  // Pushed to the other cache too.
  CHECK(cluster.clients[1]->params().at("mounts/m1/pose") ==
        "0 0 0.8 1 0 0 0");

  // And a fresh read from the store agrees.
  cluster.clients[1]->request_param("mounts/m1/pose");
  cluster.flush_client(1);
  cluster.net.run_until_idle();
  CHECK(cluster.clients[1]->params().at("mounts/m1/pose") ==
        "0 0 0.8 1 0 0 0");

  cluster.clients[1]->request_param("no/such/key");
  cluster.flush_client(1);
  cluster.net.run_until_idle();
  CHECK(cluster.clients[1]->last_error().find("not_found") !=
        std::string::npos);
}

TEST_CASE("clock offsets are recovered to the method's accuracy") {
  SUBCASE("zero latency recovers the offset exactly") {
    SimCluster cluster(1, {.latency = 0.0, .jitter = 0.0, .seed = 7}, {12.5});
    cluster.handshake_all();
    cluster.host.begin_clock_sync(cluster.net.now());
    cluster.flush_host();
    cluster.net.run_until_idle();
    REQUIRE(cluster.host.clock_synced());
    const auto& link = cluster.host.clients().at(cluster.host_conns[0]);
    CHECK(std::abs(*link.offset - 12.5) < 1e-9);
  }
  SUBCASE("symmetric latency cancels in the midpoint") {
    SimCluster cluster(1, {.latency = 0.010, .jitter = 0.0, .seed = 7},
                       {-3.25});
    cluster.handshake_all();
    cluster.host.begin_clock_sync(cluster.net.now());
    cluster.flush_host();
    cluster.net.run_until_idle();
    REQUIRE(cluster.host.clock_synced());
    const auto& link = cluster.host.clients().at(cluster.host_conns[0]);
    CHECK(std::abs(*link.offset - (-3.25)) < 1e-3);
    CHECK(link.worst_rtt == doctest::Approx(0.020));
  }
  SUBCASE("asymmetric paths bound the error by half the asymmetry") {
    SimCluster cluster(1, {.latency = 0.0, .jitter = 0.0, .seed = 7}, {5.0});
    // 5 ms toward the client, 15 ms back.
    SimNet net({.latency = 0.0, .jitter = 0.0, .seed = 11});
    HostCore host;
    ClientCore client("c");
    int conn_host = -1, conn_client = -1;
    const int hn = net.add_node([&](int conn, const std::string& b, double t) {
      host.on_bytes(conn, b, t);
      for (auto& [c2, bytes] : host.take_outbound()) net.send(c2, bytes);
    });
    const int cn = net.add_node(
        [&](int, const std::string& b, double t) {
          client.on_bytes(b, t);
          const std::string out = client.take_outbound();
          if (!out.empty()) net.send(conn_client, out);
        },
        5.0);
    std::tie(conn_host, conn_client) = net.connect(hn, cn, 0.005, 0.015);
    host.on_connect(conn_host);
    client.hello();
    net.send(conn_client, client.take_outbound());
    net.run_until_idle();
    host.begin_clock_sync(net.now());
    for (auto& [c2, bytes] : host.take_outbound()) net.send(c2, bytes);
    net.run_until_idle();
    REQUIRE(host.clock_synced());
    const double err =
        *host.clients().at(conn_host).offset - 5.0;
    CHECK(std::abs(err) <= 0.005 + 1e-12);
    CHECK(std::abs(err) == doctest::Approx(0.005));  // exactly (df-db)/2
  }
}

TEST_CASE("four arms start within one control period of each other") {
  const SimNetConfig config{.latency = 0.020, .jitter = 0.005, .seed = 2024};
  SimCluster cluster(4, config, {0.0, 3.3, -7.8, 123.456});
  cluster.handshake_all();

  cluster.host.begin_clock_sync(cluster.net.now());
  cluster.flush_host();
  cluster.net.run_until_idle();
  REQUIRE(cluster.host.clock_synced());

  std::map<std::string, std::string> plan;
  for (int i = 1; i <= 4; ++i) {
    const std::string arm = "arm" + std::to_string(i);
    plan[arm] = "arm=" + arm + "\n";
  }
  const double t_begin = cluster.net.now();
  REQUIRE(cluster.host.begin_sync_execute(plan, t_begin));
  cluster.flush_host();

  // Pump in millisecond steps, polling every client against its own clock.
  std::vector<double> fired_global(4, -1.0);
  std::vector<double> scheduled_local(4, -1.0);
  const double horizon = t_begin + 2.0;
  while (cluster.net.now() < horizon) {
    cluster.net.run_for(0.001);
    for (int i = 0; i < 4; ++i) {
      const double local = cluster.net.local_time(cluster.client_nodes[i]);
      for (const auto& action : cluster.clients[i]->poll(local)) {
        if (action.kind == ClientCore::Action::Kind::kStart) {
          fired_global[i] = cluster.net.now();
          scheduled_local[i] = action.start_time;
        }
      }
      cluster.flush_client(i);
    }
    if (std::all_of(fired_global.begin(), fired_global.end(),
                    [](double t) { return t >= 0; })) {
      break;
    }
  }

  REQUIRE(cluster.host.sync_status().phase == SyncStatus::Phase::kRunning);
  const double start_host = cluster.host.sync_status().start_host;
  const std::vector<double> offsets = {0.0, 3.3, -7.8, 123.456};
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 4; ++i) {
    REQUIRE(fired_global[i] >= 0);
    // The instant the client's clock crossed its ordered start, in global time.
    const double started = scheduled_local[i] - offsets[i];
    lo = std::min(lo, started);
    hi = std::max(hi, started);
    CHECK(std::abs(started - start_host) <= 0.008);
    // Polled at 1 ms, the observed firing trails the crossing only slightly.
    CHECK(fired_global[i] >= started - 1e-9);
    CHECK(fired_global[i] <= started + 0.002);
  }
  CHECK(hi - lo <= 0.008);

  // The guard interval left room for the orders to arrive before the start.
  CHECK(start_host - t_begin >= 0.050 - 1e-9);

  // Completion reports, stamped on each client's own clock, drive the
  // aggregate to done.
  for (int i = 0; i < 4; ++i) {
    cluster.clients[i]->report_state("arm" + std::to_string(i + 1), "idle",
                                     fired_global[i] + offsets[i] + 1.0, true,
                                     Joints::Zero());
    cluster.flush_client(i);
  }
  cluster.net.run_until_idle();
  CHECK(cluster.host.sync_status().phase == SyncStatus::Phase::kDone);
  CHECK(cluster.host.sync_status().completed_arms.size() == 4);
}

TEST_CASE("a stop behind bulk traffic in one chunk is honored first") {
  ClientCore client("c");
  client.hello();
  client.register_arm("arm1");
  client.take_outbound();

  // One coalesced chunk: load, immediate start order, then the stop.
  std::string chunk;
  chunk += encode({MessageType::kTrajLoad, 10, "arm=arm1\n"});
  chunk += encode({MessageType::kSyncStart, 11, "t=0\n"});
  chunk += encode({MessageType::kEstop, 12, ""});
  client.on_bytes(chunk, 5.0);

  CHECK(client.estopped());
  CHECK_FALSE(client.pending_start().has_value());
  bool started = false, stopped = false;
  for (const auto& action : client.poll(10.0)) {
    started |= action.kind == ClientCore::Action::Kind::kStart;
    stopped |= action.kind == ClientCore::Action::Kind::kEstop;
  }
  CHECK(stopped);
  CHECK_FALSE(started);
  // The start order was answered with a refusal.
  FrameParser parser;
  std::vector<Message> replies;
  parser.feed(client.take_outbound(), replies);
  const bool refused = std::any_of(
      replies.begin(), replies.end(), [](const Message& m) {
        return m.type == MessageType::kError &&
               m.payload.find("estopped") != std::string::npos;
      });
  CHECK(refused);
}

TEST_CASE("stop broadcast reaches every client that is still connected") {
  SimCluster cluster(3, {.latency = 0.005, .jitter = 0.001, .seed = 99});
  cluster.handshake_all();

  // One machine falls off the network entirely.
  cluster.dead_conns.insert(cluster.host_conns[2]);
  cluster.host.estop_all();
  cluster.flush_host();
  cluster.net.run_until_idle();

  CHECK(cluster.clients[0]->estopped());
  CHECK(cluster.clients[1]->estopped());
  CHECK_FALSE(cluster.clients[2]->estopped());
  CHECK(cluster.host.clients().at(cluster.host_conns[0]).estop_acks == 1);
  CHECK(cluster.host.clients().at(cluster.host_conns[1]).estop_acks == 1);
}

TEST_CASE("a client that never acknowledges is named in the timeout") {
  SimCluster cluster(2, {.latency = 0.002, .jitter = 0.0, .seed = 42});
  cluster.handshake_all();
  cluster.host.begin_clock_sync(cluster.net.now());
  cluster.flush_host();
  cluster.net.run_until_idle();
  REQUIRE(cluster.host.clock_synced());

  // client2's link dies right before the plan goes out.
  cluster.dead_conns.insert(cluster.host_conns[1]);
  std::map<std::string, std::string> plan{{"arm1", "arm=arm1\n"},
                                          {"arm2", "arm=arm2\n"}};
  const double t0 = cluster.net.now();
  REQUIRE(cluster.host.begin_sync_execute(plan, t0, 0.5));
  cluster.flush_host();
  cluster.net.run_until_idle();
  CHECK(cluster.host.sync_status().phase == SyncStatus::Phase::kLoading);

  cluster.host.poll(t0 + 0.6);
  REQUIRE(cluster.host.sync_status().phase == SyncStatus::Phase::kTimeout);
  REQUIRE(cluster.host.sync_status().missing_clients.size() == 1);
  CHECK(cluster.host.sync_status().missing_clients[0] == "client2");
}

TEST_CASE("an aborting arm turns the aggregate into a partial failure") {
  SimCluster cluster(2, {.latency = 0.002, .jitter = 0.0, .seed = 8});
  cluster.handshake_all();
  cluster.host.begin_clock_sync(cluster.net.now());
  cluster.flush_host();
  cluster.net.run_until_idle();

  std::map<std::string, std::string> plan{{"arm1", "arm=arm1\n"},
                                          {"arm2", "arm=arm2\n"}};
  REQUIRE(cluster.host.begin_sync_execute(plan, cluster.net.now()));
  cluster.flush_host();
  cluster.net.run_until_idle();
  REQUIRE(cluster.host.sync_status().phase == SyncStatus::Phase::kRunning);

  cluster.clients[0]->report_state("arm1", "idle", 1.0, true, Joints::Zero());
  cluster.clients[1]->report_state("arm2", "fault", 1.0, false,
                                   Joints::Zero());
  cluster.flush_client(0);
  cluster.flush_client(1);
  cluster.net.run_until_idle();

  CHECK(cluster.host.sync_status().phase == SyncStatus::Phase::kFailed);
  REQUIRE(cluster.host.sync_status().aborted_arms.size() == 1);
  CHECK(cluster.host.sync_status().aborted_arms[0] == "arm2");
  CHECK(cluster.host.sync_status().completed_arms ==
        std::vector<std::string>{"arm1"});
}

TEST_CASE("every peer emits strictly increasing sequence ids") {
  SimCluster cluster(2, {.latency = 0.003, .jitter = 0.001, .seed = 21});
  std::vector<uint32_t> host_seqs;
  // Tap the frames the host sends to connection 0.
  SimNet& net = cluster.net;
  cluster.handshake_all();
  cluster.host.begin_clock_sync(net.now());

  // Decode everything the host has queued for conn 0 across a busy session.
  FrameParser tap;
  std::vector<Message> frames;
  for (auto& [conn, bytes] : cluster.host.take_outbound()) {
    if (conn == cluster.host_conns[0]) tap.feed(bytes, frames);
    net.send(conn, bytes);
  }
  net.run_until_idle();
  cluster.host.push_param("settings/planner_timeout", "5");
  for (auto& [conn, bytes] : cluster.host.take_outbound()) {
    if (conn == cluster.host_conns[0]) tap.feed(bytes, frames);
    net.send(conn, bytes);
  }
  net.run_until_idle();
  REQUIRE(frames.size() >= 2);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    CHECK(frames[i].seq > frames[i - 1].seq);
  }
}

TEST_CASE("the simulated network is deterministic and lossy on request") {
  auto trace = [](uint64_t seed) {
    SimNet net({.latency = 0.004, .jitter = 0.003, .drop_rate = 0.5,
                .seed = seed});
    std::vector<std::pair<double, std::string>> got;
    const int a = net.add_node(nullptr);
    const int b = net.add_node([&](int, const std::string& bytes, double t) {
      got.emplace_back(t, bytes);
    });
    auto [ca, cb] = net.connect(a, b);
    (void)cb;
    for (int i = 0; i < 1000; ++i) net.send(ca, std::to_string(i));
    net.run_until_idle();
    return std::make_pair(got, net.dropped());
  };
  const auto [got1, dropped1] = trace(31);
  const auto [got2, dropped2] = trace(31);
  CHECK(got1 == got2);
  CHECK(dropped1 == dropped2);
  CHECK(dropped1 > 350);
  CHECK(dropped1 < 650);
  CHECK(got1.size() + dropped1 == 1000);
  // Order within the surviving stream is preserved.
  for (std::size_t i = 1; i < got1.size(); ++i) {
    CHECK(std::stoi(got1[i].second) > std::stoi(got1[i - 1].second));
    CHECK(got1[i].first >= got1[i - 1].first);
  }
}

TEST_CASE("live sockets run the same protocol end to end") {
  HostCore host_core(
      {{"settings/control_period", "0.008"}, {"named_poses/home", "0 0 0 0 0 0"}});
  TcpHost server(host_core, 0, "127.0.0.1");
  REQUIRE(server.port() != 0);

  ClientCore client_core("bench");
  TcpClientLink link(client_core, "127.0.0.1", server.port());
  REQUIRE(link.connected());

  link.with_core([](ClientCore& c) {
    c.hello();
    c.register_arm("arm1");
    c.request_param("named_poses/home");
  });

  auto wait_for = [&](const std::function<bool()>& done) {
    for (int i = 0; i < 400; ++i) {
      if (done()) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return done();
  };

  bool handshake = wait_for([&] {
    bool ok = false;
    link.with_core([&](ClientCore& c) {
      ok = c.handshake_done() && c.params().count("named_poses/home") > 0;
    });
    return ok;
  });
  REQUIRE(handshake);
  link.with_core([](ClientCore& c) {
    CHECK(c.params().at("named_poses/home") == "0 0 0 0 0 0");
  });

  // Loopback round trips are fast enough that the offset is nearly zero.
  server.with_core([](HostCore& h) { h.begin_clock_sync(wall_seconds()); });
  const bool synced = wait_for([&] {
    bool ok = false;
    server.with_core([&](HostCore& h) { ok = h.clock_synced(); });
    return ok;
  });
  REQUIRE(synced);
  server.with_core([](HostCore& h) {
    const auto& link_info = h.clients().begin()->second;
    CHECK(std::abs(*link_info.offset) < 0.050);
    CHECK(h.conn_for_arm("arm1").has_value());
  });

  server.with_core([](HostCore& h) { h.estop_all(); });
  const bool stopped = wait_for([&] {
    bool ok = false;
    link.with_core([&](ClientCore& c) { ok = c.estopped(); });
    return ok;
  });
  CHECK(stopped);

  link.stop();
  const bool gone = wait_for([&] { return server.connection_count() == 0; });
  CHECK(gone);
  server.stop();
}
