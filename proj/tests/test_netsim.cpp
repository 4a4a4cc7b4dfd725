#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qdra/netsim.hpp"

using namespace qdra;

namespace {

DirectedGraph two_cycle() { return DirectedGraph(2, {{0, 1}, {1, 0}}); }

Message piece(int from, int to, IntVec payload, int round = 1) {
    return {MessageKind::MassPiece, std::move(payload), {}, from, to, round};
}

}  // namespace

TEST_CASE("bit cost under fixed and adaptive policies") {
    Message mass = piece(0, 1, IntVec(20, 5));
    CHECK(bit_cost(mass, WidthPolicy::fixed(32)) == 640);

    Message both{MessageKind::MaxMinBroadcast, IntVec(20, 1), IntVec(20, 0), 0, 1, 1};
    CHECK(bit_cost(both, WidthPolicy::fixed(32)) == 1280);

    CHECK(bit_cost(piece(0, 1, {0}), WidthPolicy::adaptive()) == 1);
    CHECK(bit_cost(piece(0, 1, {1}), WidthPolicy::adaptive()) == 2);
    CHECK(bit_cost(piece(0, 1, {-3}), WidthPolicy::adaptive()) == 3);
    CHECK(bit_cost(piece(0, 1, {4}), WidthPolicy::adaptive()) == 4);
    CHECK(bit_cost(piece(0, 1, {0, 1, -3}), WidthPolicy::adaptive()) == 6);
}

TEST_CASE("width policy parsing") {
    CHECK(WidthPolicy::parse("fixed:16").width == 16);
    CHECK(WidthPolicy::parse("adaptive").kind == WidthPolicy::Kind::Adaptive);
    CHECK(WidthPolicy::parse("fixed:32").to_string() == "fixed:32");
    CHECK_THROWS_AS(WidthPolicy::parse("fixed:0"), std::invalid_argument);
    CHECK_THROWS_AS(WidthPolicy::parse("float"), std::invalid_argument);
}

TEST_CASE("empty round leaves counters untouched") {
    const auto g = two_cycle();
    RoundNetwork net(g, WidthPolicy::fixed(32));
    const auto inboxes = net.deliver_round({});
    CHECK(inboxes[0].empty());
    CHECK(inboxes[1].empty());
    CHECK(net.stats().messages == 0);
    CHECK(net.stats().rounds == 0);
    CHECK(net.stats().integer_payload_bits == 0);
}

TEST_CASE("self-delivery reaches the sender's inbox without network cost") {
    const auto g = two_cycle();
    RoundNetwork net(g, WidthPolicy::fixed(32));
    const auto inboxes = net.deliver_round({piece(0, 0, {7})});
    REQUIRE(inboxes[0].size() == 1);
    CHECK(inboxes[0][0].payload == IntVec{7});
    CHECK(net.stats().messages == 0);
    CHECK(net.stats().integer_payload_bits == 0);
}

TEST_CASE("two-cycle exchange counts two messages") {
    const auto g = two_cycle();
    RoundNetwork net(g, WidthPolicy::fixed(32));
    const auto inboxes = net.deliver_round({piece(0, 1, {3}), piece(1, 0, {4})});
    REQUIRE(inboxes[0].size() == 1);
    REQUIRE(inboxes[1].size() == 1);
    CHECK(inboxes[0][0].payload == IntVec{4});
    CHECK(inboxes[1][0].payload == IntVec{3});
    CHECK(net.stats().messages == 2);
    CHECK(net.stats().integer_payload_bits == 64);
    CHECK(net.stats().equivalent_float_bits == 128);
}

TEST_CASE("messages to non-neighbors are rejected") {
    DirectedGraph chain(3, {{1, 0}, {2, 1}, {0, 2}});
    RoundNetwork net(chain, WidthPolicy::fixed(32));
    CHECK_THROWS_AS(net.deliver_round({piece(0, 2, {1})}), IllegalEdge);
}

TEST_CASE("every sent message is delivered exactly once") {
    const auto g = random_strongly_connected_digraph(9, 0.4, 5);
    RoundNetwork net(g, WidthPolicy::fixed(32));
    std::mt19937_64 rng(17);
    std::vector<Message> outbox;
    std::size_t sent = 0;
    for (int i = 0; i < g.node_count(); ++i) {
        for (int l : g.out_neighbors(i)) {
            if (rng() % 2 == 0) continue;
            outbox.push_back(piece(i, l, {static_cast<std::int64_t>(rng() % 100)}));
            ++sent;
        }
    }
    const auto inboxes = net.deliver_round(outbox);
    std::size_t delivered = 0;
    for (const auto& inbox : inboxes) delivered += inbox.size();
    CHECK(delivered == sent);
    CHECK(net.stats().messages == sent);
}

TEST_CASE("per-node streams are independent of the node count") {
    NodeRngPool small(123, 3);
    NodeRngPool large(123, 5);
    for (int node = 0; node < 3; ++node) {
        auto& a = small.stream(node);
        auto& b = large.stream(node);
        for (int draw = 0; draw < 100; ++draw) CHECK(a() == b());
    }

    NodeRngPool again(123, 3);
    NodeRngPool fresh(123, 3);
    CHECK(again.stream(0)() == fresh.stream(0)());
    CHECK_THROWS(again.stream(3));
}
