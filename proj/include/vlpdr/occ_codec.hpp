#pragma once

// Optical camera communication codec: cyclic sub-packet framing of LED IDs,
// rolling-shutter column demodulation and adaptive multi-frame fusion with
// per-position majority voting.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlpdr/bits.hpp"
#include "vlpdr/error.hpp"

namespace vlpdr {

/// Framing contract shared by transmitter and receiver.
///
/// A sub-packet is `header | flag(i) | chunk_i | flag(i)`. The ID is split
/// into `num_chunks` chunks of `chunk_len` bits; the sequence flag carries the
/// chunk index so chunks seen in different frames can be reassembled.
class PacketSchema {
 public:
  /// Defaults: header 011110, 1-bit flags, two chunks of 10 bits (20-bit IDs).
  PacketSchema();
  PacketSchema(Bits header, std::size_t flag_width, std::size_t chunk_len, std::size_t num_chunks);

  const Bits& header() const noexcept { return header_; }
  std::size_t flag_width() const noexcept { return flag_width_; }
  std::size_t chunk_len() const noexcept { return chunk_len_; }
  std::size_t num_chunks() const noexcept { return num_chunks_; }
  std::size_t id_len() const noexcept { return chunk_len_ * num_chunks_; }
  std::size_t packet_len() const noexcept { return header_.size() + 2 * flag_width_ + chunk_len_; }
  std::size_t stream_len() const noexcept { return packet_len() * num_chunks_; }

  Bits flag_bits(std::size_t index) const;

 private:
  void validate() const;

  Bits header_;
  std::size_t flag_width_;
  std::size_t chunk_len_;
  std::size_t num_chunks_;
};

struct SubPacket {
  std::size_t seq_index = 0;
  Bits payload;

  Bits serialize(const PacketSchema& schema) const;
};

struct PositionedBit {
  std::size_t position;
  std::uint8_t value;
};

/// Payload bits recovered from one frame with their global ID positions.
struct FrameBits {
  std::vector<PositionedBit> bits;
  /// Competing parses when more than one alignment fits the frame. They are
  /// not counted in b_n until the accumulator can tell them apart.
  std::vector<std::vector<PositionedBit>> candidates;

  std::size_t b_n() const noexcept { return bits.size(); }
};

/// Cyclic transmit stream: sub-packets 0..num_chunks-1, repeated.
Bits encode_id(const LedId& id, const PacketSchema& schema, std::size_t repetitions = 1);

/// False when some rotation of the ID's stream is itself the stream of a
/// different ID. Such IDs cannot be told apart by any receiver and should
/// not be assigned to fixtures.
bool rotation_unique(const LedId& id, const PacketSchema& schema);

struct DemodOptions {
  /// Below this separation of the two intensity clusters the profile is
  /// treated as unstriped and classified against `global_level`.
  double min_contrast = 0.08;
  double global_level = 0.5;
};

/// Demodulates a grayscale column profile (intensities in [0, 1]) into bits.
Bits demodulate_frame(std::span<const double> column, double rows_per_bit,
                      const DemodOptions& options = {});

/// Searches headers, resolves the sub-packet alignment and positions every
/// payload bit whose chunk index is readable from an adjacent flag.
FrameBits parse_subpackets(const Bits& bits, const PacketSchema& schema);

struct VoteResult {
  std::optional<LedId> id;
  /// Positions with no observations or an exact tie.
  std::vector<std::size_t> unresolved;
  std::size_t frame_interval = 0;
  std::size_t b_cnt = 0;
};

/// Vote tallies and bit budget of one fusion round.
class FusionAccumulator {
 public:
  using Tally = std::array<std::uint32_t, 2>;

  FusionAccumulator(std::size_t b_full, std::size_t b_ref);

  /// Adds one frame. Returns true once `b_cnt >= min(b_ref, k * b_full)`, or
  /// unconditionally on the frame following an unresolved vote.
  ///
  /// Ambiguous frames are held back and counted once exactly one of their
  /// candidate parses agrees with the tallies better than the rest.
  bool accumulate(const FrameBits& frame);

  std::size_t threshold() const noexcept;
  bool ready() const noexcept;

  const std::vector<Tally>& counts() const noexcept { return counts_; }
  std::size_t b_cnt() const noexcept { return b_cnt_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t b_ref() const noexcept { return b_ref_; }
  std::size_t b_full() const noexcept { return b_full_; }
  bool extending() const noexcept { return extend_; }
  std::size_t pending() const noexcept { return pending_.size(); }

  void reset();

 private:
  friend VoteResult majority_vote(FusionAccumulator& acc);

  void add_bits(const std::vector<PositionedBit>& bits);
  void resolve_pending();

  std::vector<std::vector<std::vector<PositionedBit>>> pending_;

  std::vector<Tally> counts_;
  std::size_t b_cnt_ = 0;
  std::size_t k_ = 0;
  std::size_t b_ref_;
  std::size_t b_full_;
  bool extend_ = false;
};

/// Per-position mode. Resets the accumulator when every position resolves;
/// otherwise marks it to vote again after one more frame.
VoteResult majority_vote(FusionAccumulator& acc);

struct DecodeResult {
  LedId id;
  std::size_t frame_interval_k = 0;
  std::size_t frames_consumed = 0;
  std::size_t b_cnt = 0;
};

class DecodeTimeout : public Error {
 public:
  DecodeTimeout(std::size_t frames, std::vector<FusionAccumulator::Tally> counts)
      : Error("decode_timeout", "frame budget of " + std::to_string(frames) + " exhausted without a full vote"),
        frames_(frames),
        counts_(std::move(counts)) {}
  std::size_t frames() const noexcept { return frames_; }
  const std::vector<FusionAccumulator::Tally>& partial_counts() const noexcept { return counts_; }

 private:
  std::size_t frames_;
  std::vector<FusionAccumulator::Tally> counts_;
};

/// One row of the decode report: frame_index, k, b_cnt, id_hex, status.
struct DecodeEvent {
  std::size_t frame_index = 0;
  std::size_t k = 0;
  std::size_t b_cnt = 0;
  std::string id_hex;
  std::string status;  // "decoded" | "unresolved"
};

struct DecoderConfig {
  PacketSchema schema{};
  std::size_t b_ref = 80;
  DemodOptions demod{};
};

/// Streaming decoder driven one frame at a time, in capture order.
class StreamDecoder {
 public:
  explicit StreamDecoder(DecoderConfig config);

  /// Returns a result when the current round produced a complete ID.
  std::optional<DecodeResult> push_bits(const Bits& raw);
  std::optional<DecodeResult> push_profile(std::span<const double> column, double rows_per_bit);

  const FusionAccumulator& accumulator() const noexcept { return acc_; }
  const std::vector<DecodeEvent>& events() const noexcept { return events_; }
  std::size_t frames_consumed() const noexcept { return frames_; }
  const DecoderConfig& config() const noexcept { return config_; }

  /// Starts a fresh round and clears the frame counter.
  void restart();

 private:
  DecoderConfig config_;
  FusionAccumulator acc_;
  std::size_t frames_ = 0;
  std::vector<DecodeEvent> events_;
};

/// Default frame budget: ten times the earliest possible ready point.
std::size_t default_frame_budget(std::size_t b_ref, std::size_t b_full);

/// Runs the full receive chain over `frames` until the first complete vote.
/// Throws DecodeTimeout when the budget (or the input) runs out first.
DecodeResult decode_stream(std::span<const std::vector<double>> frames, const PacketSchema& schema,
                           std::size_t b_ref, double rows_per_bit,
                           std::optional<std::size_t> max_frames = std::nullopt,
                           const DemodOptions& demod = {});

/// Bit-level variant used by benchmarks that bypass demodulation.
DecodeResult decode_bit_frames(std::span<const Bits> frames, const PacketSchema& schema,
                               std::size_t b_ref, std::optional<std::size_t> max_frames = std::nullopt);

}  // namespace vlpdr
