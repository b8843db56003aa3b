#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <string>

#include "vlpdr/occ_codec.hpp"

using namespace vlpdr;

namespace {

LedId random_id(std::mt19937_64& rng, std::size_t n = 20) {
  Bits b(n);
  for (auto& x : b) x = rng() & 1u;
  return LedId(b);
}

// Cyclic window of the transmit stream.
Bits window(const Bits& stream, std::size_t start, std::size_t len) {
  Bits out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = stream[(start + i) % stream.size()];
  return out;
}

FrameBits frame_with(std::size_t n, std::size_t first_pos = 0) {
  FrameBits f;
  for (std::size_t i = 0; i < n; ++i) f.bits.push_back({(first_pos + i) % 20, 1});
  return f;
}

// Ready point of the accumulator for a scripted b_n sequence.
std::size_t ready_k(const std::vector<std::size_t>& bn, std::size_t b_ref) {
  FusionAccumulator acc(20, b_ref);
  for (std::size_t i = 0; i < bn.size(); ++i) {
    if (acc.accumulate(frame_with(bn[i], i))) return acc.k();
  }
  return 0;
}

}  // namespace

TEST_CASE("bits and hex") {
  CHECK(bits_to_string(bits_from_string("0110 1")) == "01101");
  CHECK(bits_to_hex(bits_from_string("00010010001101000101")) == "12345");
  CHECK(bits_from_hex("0x12345", 20) == bits_from_string("00010010001101000101"));
  CHECK_THROWS(bits_from_hex("fffff", 16));
  CHECK(LedId::from_hex("abcde", 20).hex() == "abcde");
}

TEST_CASE("encoding follows the sub-packet layout") {
  const PacketSchema schema;
  CHECK(schema.packet_len() == 18);
  CHECK(schema.stream_len() == 36);

  const LedId id(bits_from_string("1010101010" "0101010101"));
  const std::string expected = std::string("011110") + "0" + "1010101010" + "0" + "011110" + "1" + "0101010101" + "1";
  CHECK(bits_to_string(encode_id(id, schema)) == expected);

  const Bits once = encode_id(id, schema);
  const Bits thrice = encode_id(id, schema, 3);
  REQUIRE(thrice.size() == 108);
  for (std::size_t i = 0; i < thrice.size(); ++i) CHECK(thrice[i] == once[i % once.size()]);

  const Bits zeros = encode_id(LedId(Bits(20, 0)), schema);
  CHECK(bits_to_string(zeros) == "011110" "0" "0000000000" "0" "011110" "1" "0000000000" "1");
  CHECK(parse_subpackets(zeros, schema).b_n() == 20);

  CHECK_THROWS_AS(encode_id(LedId(Bits(19, 0)), schema), SchemaError);
  CHECK_THROWS_AS(encode_id(id, schema, 0), ContractViolation);
}

TEST_CASE("schema validation") {
  CHECK_THROWS_AS(PacketSchema(Bits{}, 1, 10, 2), SchemaError);
  CHECK_THROWS_AS(PacketSchema(bits_from_string("0110"), 1, 10, 3), SchemaError);  // 3 chunks need 2 flag bits
  CHECK_THROWS_AS(PacketSchema(bits_from_string("0"), 1, 10, 2), SchemaError);     // header inside its framing
  CHECK_NOTHROW(PacketSchema(bits_from_string("011110"), 2, 8, 4));
}

TEST_CASE("demodulation") {
  SUBCASE("alternating runs") {
    std::vector<double> col;
    for (int run = 0; run < 10; ++run) col.insert(col.end(), 4, run % 2 == 0 ? 0.9 : 0.2);
    CHECK(bits_to_string(demodulate_frame(col, 4.0)) == "1010101010");
  }
  SUBCASE("uniform bright column") {
    const std::vector<double> col(40, 0.9);
    CHECK(demodulate_frame(col, 10.0 / 3.0) == Bits(12, 1));
  }
  SUBCASE("fractional rows per bit") {
    std::mt19937_64 rng(5);
    const double rpb = 10.0 / 3.0;
    for (int trial = 0; trial < 50; ++trial) {
      Bits truth(40);
      for (auto& b : truth) b = rng() & 1u;
      truth.front() = 1, truth.back() = 0;
      std::vector<double> col;
      for (int row = 0; row < static_cast<int>(truth.size() * rpb); ++row) {
        col.push_back(truth[static_cast<std::size_t>(row / rpb)] ? 0.9 : 0.25);
      }
      CHECK(demodulate_frame(col, rpb) == truth);
    }
  }
  const std::vector<double> col(10, 0.5);
  CHECK_THROWS_AS(demodulate_frame(col, 1.5), UnsupportedDensity);
  CHECK_THROWS_AS(demodulate_frame({}, 3.0), ContractViolation);
}

TEST_CASE("parsing sub-packets") {
  const PacketSchema schema;
  SUBCASE("complete sub-packet with flag 1") {
    const Bits b = bits_from_string("011110" "1" "1100110011" "1");
    const auto fb = parse_subpackets(b, schema);
    REQUIRE(fb.b_n() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(fb.bits[i].position == 10 + i);
      CHECK(fb.bits[i].value == b[7 + i]);
    }
  }
  SUBCASE("no header") { CHECK(parse_subpackets(bits_from_string("0000000000"), schema).b_n() == 0); }
  SUBCASE("truncated payload") {
    const auto fb = parse_subpackets(bits_from_string("011110" "0" "101100"), schema);
    REQUIRE(fb.b_n() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(fb.bits[i].position == i);
  }
  SUBCASE("payload before a header resolves through the trailing flag") {
    // ...tail of chunk 1, its flag, then the header of chunk 0.
    const auto fb = parse_subpackets(bits_from_string("0101" "1" "011110" "0"), schema);
    REQUIRE(fb.b_n() >= 4);
    CHECK(fb.bits[0].position == 16);
    CHECK(fb.bits[3].position == 19);
  }
  SUBCASE("disagreeing flags drop the payload") {
    const auto fb = parse_subpackets(bits_from_string("011110" "0" "1100110011" "1"), schema);
    CHECK(fb.b_n() == 0);
  }
}

TEST_CASE("a header split by the window edges still fixes the alignment") {
  const PacketSchema schema;
  // Last header bit, flag 1, payload 0111011110 (contains the header pattern),
  // flag 1, then the first five header bits. Read from the inner pattern,
  // the bit before it would be a trailing flag 1 followed by flag 1 again,
  // which breaks the flag sequence.
  const Bits w = bits_from_string("0" "1" "0111011110" "1" "01111");
  const auto fb = parse_subpackets(w, schema);
  REQUIRE(fb.candidates.empty());
  REQUIRE(fb.b_n() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(fb.bits[i].position == 10 + i);
    CHECK(fb.bits[i].value == w[2 + i]);
  }
}

TEST_CASE("short windows are either unambiguous and correct or deferred") {
  const PacketSchema schema;
  std::mt19937_64 rng(12);
  std::size_t deferred = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const LedId id = random_id(rng);
    const Bits stream = encode_id(id, schema);
    const auto fb = parse_subpackets(window(stream, rng() % 36, 18), schema);
    for (const auto& b : fb.bits) CHECK(b.value == id.bits()[b.position]);
    if (!fb.candidates.empty()) {
      ++deferred;
      CHECK(fb.b_n() == 0);
      // The true reading is always among the candidates.
      bool found = false;
      for (const auto& c : fb.candidates) {
        bool match = true;
        for (const auto& b : c) match &= b.value == id.bits()[b.position];
        found |= match;
      }
      CHECK(found);
    }
  }
  CHECK(deferred < 3000 / 5);
}

TEST_CASE("deferred candidates are released by agreement with the tallies") {
  FusionAccumulator acc(20, 80);
  FrameBits amb;
  amb.candidates = {{{0, 1}, {1, 1}, {2, 0}, {15, 1}}, {{5, 0}, {6, 0}, {7, 1}}};
  acc.accumulate(amb);
  CHECK(acc.pending() == 1);
  CHECK(acc.b_cnt() == 0);
  // Unrelated positions do not release it.
  acc.accumulate(FrameBits{{{10, 1}, {11, 0}}});
  CHECK(acc.pending() == 1);
  // Two agreeing bits with the first candidate do.
  acc.accumulate(FrameBits{{{0, 1}, {1, 1}}});
  CHECK(acc.pending() == 0);
  CHECK(acc.b_cnt() == 2 + 2 + 4);
  CHECK(acc.counts()[15][1] == 1);
  CHECK(acc.counts()[5][0] == 0);

  FusionAccumulator conflict(20, 80);
  conflict.accumulate(FrameBits{{{0, 1}, {1, 1}}});
  FrameBits both;
  both.candidates = {{{0, 1}, {3, 0}}, {{1, 1}, {4, 0}}};  // equal support
  conflict.accumulate(both);
  CHECK(conflict.pending() == 1);
  conflict.reset();
  CHECK(conflict.pending() == 0);
}

TEST_CASE("rotation-unique identifiers") {
  const PacketSchema schema;
  // Both chunks of 0f4bc rotate into the framing of bc0f4.
  CHECK_FALSE(rotation_unique(LedId::from_hex("0f4bc", 20), schema));
  CHECK_FALSE(rotation_unique(LedId::from_hex("bc0f4", 20), schema));
  CHECK(rotation_unique(LedId::from_hex("12345", 20), schema));
  CHECK(rotation_unique(LedId(Bits(20, 0)), schema));
  std::mt19937_64 rng(6);
  int unique = 0;
  for (int i = 0; i < 2000; ++i) unique += rotation_unique(random_id(rng), schema);
  CHECK(unique >= 1995);
}

TEST_CASE("windows long enough to hold a whole header never yield wrong bits") {
  const PacketSchema schema;
  std::mt19937_64 rng(11);
  std::size_t positioned = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const LedId id = random_id(rng);
    const Bits stream = encode_id(id, schema);
    const std::size_t len = 23 + rng() % 30;
    const auto fb = parse_subpackets(window(stream, rng() % 36, len), schema);
    for (const auto& b : fb.bits) CHECK(b.value == id.bits()[b.position]);
    positioned += fb.b_n();
  }
  CHECK(positioned > 3000 * 10);
}

TEST_CASE("accumulator ready point") {
  CHECK(ready_k(std::vector<std::size_t>(5, 20), 80) == 1);
  CHECK(ready_k(std::vector<std::size_t>(20, 9), 80) == 9);
  std::vector<std::size_t> seq(20, 10);
  seq[0] = 0;
  CHECK(ready_k(seq, 80) == 9);

  FusionAccumulator acc(20, 50);
  CHECK(acc.threshold() == 0);
  acc.accumulate(frame_with(9));
  CHECK(acc.threshold() == 20);
  CHECK(acc.b_cnt() == 9);
  CHECK_THROWS(FusionAccumulator(0, 80));
}

TEST_CASE("majority vote") {
  SUBCASE("unanimous") {
    std::mt19937_64 rng(1);
    const LedId id = random_id(rng);
    FusionAccumulator acc(20, 80);
    FrameBits f;
    for (std::size_t i = 0; i < 20; ++i) f.bits.push_back({i, id.bits()[i]});
    REQUIRE(acc.accumulate(f));
    const auto v = majority_vote(acc);
    REQUIRE(v.id);
    CHECK(*v.id == id);
    CHECK(v.frame_interval == 1);
    CHECK(acc.k() == 0);  // round restarted
  }
  SUBCASE("two to one and ties") {
    FusionAccumulator acc(20, 3);
    FrameBits a, b;
    for (std::size_t i = 0; i < 20; ++i) a.bits.push_back({i, 0});
    b.bits = {{0, 1}, {1, 1}};
    acc.accumulate(a);
    acc.accumulate(b);
    acc.accumulate(FrameBits{{{0, 1}}});
    // position 0: 1 x2, 0 x1 -> 1; position 1: 1 x1, 0 x1 -> tie
    const auto v = majority_vote(acc);
    CHECK_FALSE(v.id);
    REQUIRE(v.unresolved.size() == 1);
    CHECK(v.unresolved[0] == 1);
    CHECK(acc.extending());
    // One forced frame settles the tie.
    CHECK(acc.accumulate(FrameBits{{{1, 0}}}));
    const auto w = majority_vote(acc);
    REQUIRE(w.id);
    CHECK(w.id->bits()[0] == 1);
    CHECK(w.id->bits()[1] == 0);
  }
}

TEST_CASE("stream decoder") {
  const PacketSchema schema;
  std::mt19937_64 rng(99);
  SUBCASE("full packet per frame decodes at k = 1") {
    const LedId id = random_id(rng);
    const Bits stream = encode_id(id, schema);
    const std::vector<Bits> frames{window(stream, 5, 60)};
    const auto r = decode_bit_frames(frames, schema, 80);
    CHECK(r.id == id);
    CHECK(r.frame_interval_k == 1);
  }
  SUBCASE("one sub-packet per frame needs several frames") {
    for (int t = 0; t < 50; ++t) {
      const LedId id = random_id(rng);
      const Bits stream = encode_id(id, schema);
      std::vector<Bits> frames;
      std::size_t start = rng() % 36;
      for (int f = 0; f < 40; ++f, start += 1000) frames.push_back(window(stream, start, 18));
      const auto r = decode_bit_frames(frames, schema, 80, 40);
      CHECK(r.id == id);
      CHECK(r.frame_interval_k >= 8);  // at most 10 payload bits per frame against b_ref = 80
    }
  }
  SUBCASE("no frames") {
    CHECK_THROWS_AS(decode_bit_frames({}, schema, 80), DecodeTimeout);
  }
  CHECK(default_frame_budget(80, 20) == 40);
  CHECK(default_frame_budget(10, 20) == 10);

  StreamDecoder dec({schema, 80, {}});
  const LedId id = random_id(rng);
  REQUIRE(dec.push_bits(window(encode_id(id, schema), 0, 40)));
  REQUIRE(dec.events().size() == 1);
  CHECK(dec.events()[0].status == "decoded");
  CHECK(dec.events()[0].id_hex == id.hex());
}
