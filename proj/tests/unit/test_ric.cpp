#include <doctest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>

#include <chrono>
#include <thread>

#include "oranlab/e2/codec.hpp"
#include "oranlab/ric/service.hpp"
#include "oranlab/ric/tcp.hpp"
#include "oranlab/ric/testbed.hpp"

using namespace oranlab;
using namespace oranlab::ric;

namespace {

TestbedConfig small_bed(int n_bs = 1) {
  TestbedConfig cfg;
  cfg.scenario.n_bs = n_bs;
  cfg.link_delay_ms = 2;
  return cfg;
}

/// A connection driven by hand: records what the RIC sends to it.
struct FakePeer {
  std::vector<e2::E2Message> received;
  bool closed = false;
  e2::StreamDecoder dec;
  ConnId open(RicService& ric) {
    return ric.open_connection(
        [this](std::span<const std::uint8_t> b) {
          dec.feed(b);
          while (auto r = dec.next()) received.push_back(*r->message);
        },
        [this] { closed = true; });
  }
};

}  // namespace

TEST_CASE("seven nodes register") {
  Testbed bed(small_bed(7));
  REQUIRE(bed.start());
  CHECK(bed.ric().registry_size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(bed.node(i).established());
}

TEST_CASE("re-registering a bs_id replaces and closes the old session") {
  RicService ric;
  FakePeer a, b;
  const auto ca = a.open(ric);
  const auto cb = b.open(ric);
  ric.on_bytes(ca, e2::encode(e2::SetupRequest{5, {e2::SmId::KpmReport}}), 0);
  REQUIRE(ric.registry_size() == 1);
  ric.on_bytes(cb, e2::encode(e2::SetupRequest{5, {e2::SmId::KpmReport}}), 1);
  CHECK(ric.registry_size() == 1);
  CHECK(a.closed);
  CHECK_FALSE(b.closed);
  CHECK(ric.node(5)->conn == cb);
}

TEST_CASE("setup with no service models is rejected") {
  RicService ric;
  FakePeer a;
  const auto ca = a.open(ric);
  ric.on_bytes(ca, e2::encode(e2::SetupRequest{5, {}}), 0);
  CHECK(ric.registry_size() == 0);
  REQUIRE(a.received.size() == 1);
  CHECK(std::get<e2::SetupResponse>(a.received[0]).accepted == false);
}

TEST_CASE("subscriptions route to their owner only, with fan-out per subscriber") {
  Testbed bed(small_bed(2));
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x1 = ric.attach_xapp("one");
  const auto x2 = ric.attach_xapp("two");
  const auto x3 = ric.attach_xapp("bystander");
  const auto s1 = ric.subscribe(x1, 0, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, bed.now_ms());
  const auto s2 = ric.subscribe(x2, 0, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, bed.now_ms());
  bed.run_for(1000);
  auto d1 = ric.poll(x1);
  auto d2 = ric.poll(x2);
  CHECK(d1.size() >= 3);
  CHECK(d2.size() == d1.size());
  for (const auto& d : d1) CHECK(d.indication.sub_id == s1);
  for (const auto& d : d2) CHECK(d.indication.sub_id == s2);
  for (const auto& d : d1) CHECK(d.indication.payload.size() == 6);
  CHECK(ric.poll(x3).empty());
  CHECK(ric.subs_for_node(0) == std::set<SubId>{s1, s2});
  CHECK_THROWS_AS(ric.subscribe(x1, 9, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, 0), NoSuchNode);
}

TEST_CASE("periodic indications are spaced by the reporting period") {
  Testbed bed(small_bed());
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x = ric.attach_xapp("x");
  ric.subscribe(x, 0, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, bed.now_ms());
  std::vector<std::int64_t> arrivals;
  bed.add_agent([&](std::int64_t now) {
    for (auto& d : ric.poll(x)) {
      arrivals.push_back(now);
      CHECK(d.received_ms == now);
    }
  });
  bed.run_for(3000);
  REQUIRE(arrivals.size() >= 10);
  for (std::size_t i = 1; i < arrivals.size(); ++i) {
    CHECK(std::abs(arrivals[i] - arrivals[i - 1] - 250) <= 1);
  }
}

TEST_CASE("mismatched periodic subscription is refused by the node") {
  Testbed bed(small_bed());
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x = ric.attach_xapp("x");
  const auto s = ric.subscribe(x, 0, e2::SmId::KpmReport, 100, e2::Trigger::Periodic, bed.now_ms());
  bed.run_for(20);
  auto ev = ric.poll_subscription_events(x);
  REQUIRE(ev.size() == 1);
  CHECK_FALSE(ev[0].accepted);
  CHECK_FALSE(ric.route(s).has_value());
}

TEST_CASE("route_indication") {
  RicConfig rc;
  rc.queue_bound = 8;
  Testbed bed([&] {
    auto c = small_bed();
    c.ric = rc;
    return c;
  }());
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x = ric.attach_xapp("x");
  const auto s = ric.subscribe(x, 0, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, bed.now_ms());
  bed.run_for(10);
  REQUIRE(ric.route(s)->accepted);

  SUBCASE("unknown sub_id") {
    const auto before = ric.stats().unknown_sub_drops;
    CHECK(ric.route_indication(e2::Indication{999, 0, 1, {}}) == 0);
    CHECK(ric.stats().unknown_sub_drops == before + 1);
  }
  SUBCASE("single subscriber") {
    CHECK(ric.route_indication(e2::Indication{s, 0, 1, {}}) == 1);
    CHECK(ric.queue_length(x) == 1);
  }
  SUBCASE("flood keeps the newest B entries") {
    for (e2::SeqNo i = 1; i <= 20; ++i) ric.route_indication(e2::Indication{s, 0, i, {}});
    CHECK(ric.queue_length(x) == 8);
    CHECK(ric.queue_drops(x) == 12);
    auto q = ric.poll(x);
    CHECK(q.front().indication.seq_no == 13);
    CHECK(q.back().indication.seq_no == 20);
  }
}

TEST_CASE("control round trip changes the RAN profile at the next TTI") {
  Testbed bed(small_bed());
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x = ric.attach_xapp("x");
  const SlicingProfile target{{36, 3, 11}};
  const SchedulingProfile sched{{Policy::PF, Policy::RR, Policy::WF}};
  const auto t0 = bed.now_ms();
  const auto ticket = ric.send_control(x, 0, target, sched, t0);
  std::optional<ControlResult> res;
  for (int i = 0; i < 50 && !res; ++i) {
    bed.step_ms();
    for (auto& r : ric.poll_control_results(x)) res = r;
  }
  REQUIRE(res);
  CHECK(res->ticket == ticket);
  CHECK(res->outcome == ControlOutcome::Ok);
  CHECK(bed.cell(0).slicing() == target);
  CHECK(bed.cell(0).scheduling() == sched);
  // Sent at t0, delivered after the link delay, applied at that TTI.
  CHECK(bed.cell(0).profile_applied_tti() == t0 + 2);

  SUBCASE("malformed profile is rejected and the RAN keeps its profile") {
    ric.send_control(x, 0, SlicingProfile{{30, 30, 30}}, sched, bed.now_ms());
    bed.run_for(10);
    auto rs = ric.poll_control_results(x);
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].outcome == ControlOutcome::Rejected);
    CHECK(bed.cell(0).slicing() == target);
  }
  SUBCASE("unknown node") {
    CHECK_THROWS_AS(ric.send_control(x, 42, target, sched, 0), NoSuchNode);
  }
}

TEST_CASE("control to a dead node times out, then the node is evicted") {
  auto cfg = small_bed();
  cfg.ric.node_timeout_ms = 1000;
  Testbed bed(cfg);
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x = ric.attach_xapp("x");
  const auto s = ric.subscribe(x, 0, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, bed.now_ms());
  bed.run_for(300);
  bed.set_responsive(0, false);
  const auto sent = bed.now_ms();
  ric.send_control(x, 0, SlicingProfile{{36, 3, 11}}, {}, sent);
  bed.run_for(cfg.ric.control_deadline_ms + 5);
  auto rs = ric.poll_control_results(x);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].outcome == ControlOutcome::Timeout);
  CHECK(rs[0].resolved_ms - sent == cfg.ric.control_deadline_ms);
  bed.run_for(1500);
  CHECK(ric.registry_size() == 0);
  CHECK_FALSE(ric.route(s).has_value());
  CHECK(ric.subs_for_node(0).empty());
  CHECK(ric.stats().evictions == 1);
}

TEST_CASE("arbitration between two controlling xApps") {
  SUBCASE("exclusive: second controller gets Conflict") {
    Testbed bed(small_bed());
    REQUIRE(bed.start());
    auto& ric = bed.ric();
    const auto a = ric.attach_xapp("a");
    const auto b = ric.attach_xapp("b");
    ric.send_control(a, 0, SlicingProfile{{36, 3, 11}}, {}, bed.now_ms());
    ric.send_control(b, 0, SlicingProfile{{36, 9, 5}}, {}, bed.now_ms());
    bed.run_for(10);
    CHECK(ric.poll_control_results(b).at(0).outcome == ControlOutcome::Conflict);
    CHECK(ric.poll_control_results(a).at(0).outcome == ControlOutcome::Ok);
    CHECK(bed.cell(0).slicing() == SlicingProfile{{36, 3, 11}});
    CHECK(ric.controller_of(0) == a);
    ric.detach_xapp(a, bed.now_ms());
    ric.send_control(b, 0, SlicingProfile{{36, 9, 5}}, {}, bed.now_ms());
    bed.run_for(10);
    CHECK(ric.poll_control_results(b).at(0).outcome == ControlOutcome::Ok);
  }
  SUBCASE("last writer wins") {
    auto cfg = small_bed();
    cfg.ric.arbitration = Arbitration::LastWriterWins;
    Testbed bed(cfg);
    REQUIRE(bed.start());
    auto& ric = bed.ric();
    const auto a = ric.attach_xapp("a");
    const auto b = ric.attach_xapp("b");
    ric.send_control(a, 0, SlicingProfile{{36, 3, 11}}, {}, bed.now_ms());
    ric.send_control(b, 0, SlicingProfile{{36, 9, 5}}, {}, bed.now_ms());
    bed.run_for(10);
    CHECK(ric.poll_control_results(a).at(0).outcome == ControlOutcome::Ok);
    CHECK(ric.poll_control_results(b).at(0).outcome == ControlOutcome::Ok);
    CHECK(bed.cell(0).slicing() == SlicingProfile{{36, 9, 5}});
  }
}

TEST_CASE("on-event subscription reports when a control takes effect") {
  Testbed bed(small_bed());
  REQUIRE(bed.start());
  auto& ric = bed.ric();
  const auto x = ric.attach_xapp("x");
  ric.subscribe(x, 0, e2::SmId::KpmReport, 0, e2::Trigger::OnEvent, bed.now_ms());
  bed.run_for(100);
  CHECK(ric.poll(x).empty());
  ric.send_control(x, 0, SlicingProfile{{36, 3, 11}}, {}, bed.now_ms());
  bed.run_for(20);
  auto d = ric.poll(x);
  REQUIRE(d.size() == 1);
  CHECK(d[0].indication.payload.size() == 6);
}

TEST_CASE("event log lines follow the key=value schema") {
  Testbed bed(small_bed());
  REQUIRE(bed.start());
  auto log = bed.ric().event_log();
  REQUIRE_FALSE(log.empty());
  CHECK(log[0].rfind("t=", 0) == 0);
  CHECK(log[0].find(" ev=node_registered") != std::string::npos);
}

TEST_CASE("capture of a testbed session replays") {
  auto cfg = small_bed();
  cfg.capture_path = (std::filesystem::temp_directory_path() / "oranlab_bed.e2cap").string();
  {
    Testbed bed(cfg);
    REQUIRE(bed.start());
    auto x = bed.ric().attach_xapp("x");
    bed.ric().subscribe(x, 0, e2::SmId::KpmReport, 250, e2::Trigger::Periodic, bed.now_ms());
    bed.run_for(600);
  }
  auto msgs = e2::read_capture(cfg.capture_path);
  CHECK(std::holds_alternative<e2::SetupRequest>(msgs.at(0)));
  CHECK(std::count_if(msgs.begin(), msgs.end(), [](const auto& m) { return std::holds_alternative<e2::Indication>(m); }) == 2);
  std::filesystem::remove(cfg.capture_path);
}

TEST_CASE("TCP transport") {
  RicService ric;
  TcpServer server(ric, "127.0.0.1", 0);
  server.start();
  REQUIRE(server.port() != 0);
  const int fd = tcp_connect("127.0.0.1", server.port());
  auto frame = e2::encode(e2::SetupRequest{11, {e2::SmId::KpmReport, e2::SmId::RanControl}});
  // Dribble the frame to exercise reassembly across reads.
  for (std::size_t i = 0; i < frame.size(); i += 5) {
    REQUIRE(write_all(fd, frame.data() + i, std::min<std::size_t>(5, frame.size() - i)));
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  e2::StreamDecoder dec;
  std::optional<e2::E2Message> reply;
  std::uint8_t buf[256];
  while (!reply) {
    const auto n = ::recv(fd, buf, sizeof(buf), 0);
    REQUIRE(n > 0);
    dec.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    if (auto r = dec.next()) reply = r->message;
  }
  CHECK(std::get<e2::SetupResponse>(*reply).accepted);
  for (int i = 0; i < 100 && !ric.is_registered(11); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK(ric.is_registered(11));
  ::close(fd);
  for (int i = 0; i < 200 && ric.is_registered(11); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK_FALSE(ric.is_registered(11));
  server.stop();
}
