#include "vlpdr/occ_codec.hpp"

#include <algorithm>
#include <cmath>

namespace vlpdr {

namespace {

/// Midpoint between the means of the two intensity clusters (iterated
/// from the overall mean until the split stops moving).
double two_level_threshold(std::span<const double> x, double& contrast) {
  double t = 0;
  for (double v : x) t += v;
  t /= static_cast<double>(x.size());
  double hi_mean = t, lo_mean = t;
  for (int iter = 0; iter < 32; ++iter) {
    double hs = 0, ls = 0;
    std::size_t hn = 0, ln = 0;
    for (double v : x) {
      if (v > t) {
        hs += v;
        ++hn;
      } else {
        ls += v;
        ++ln;
      }
    }
    hi_mean = hn ? hs / static_cast<double>(hn) : t;
    lo_mean = ln ? ls / static_cast<double>(ln) : t;
    const double next = 0.5 * (hi_mean + lo_mean);
    if (next == t) break;
    t = next;
  }
  contrast = hi_mean - lo_mean;
  return t;
}

bool read_flag(const Bits& bits, long start, std::size_t width, std::size_t& value) {
  const long n = static_cast<long>(bits.size());
  if (start < 0 || start + static_cast<long>(width) > n) return false;
  value = 0;
  for (std::size_t j = 0; j < width; ++j) value = (value << 1) | bits[static_cast<std::size_t>(start) + j];
  return true;
}

struct Alignment {
  bool valid = false;
  /// Header bits visible in the window, whole or split at the edges.
  long header_bits = 0;
  std::vector<PositionedBit> bits;
};

// Interprets the window under one sub-packet alignment. Any visible header
// bit that disagrees, or a break in the cyclic flag sequence, invalidates it.
// Payload is positioned only once a header's worth of bits confirms the
// alignment.
Alignment evaluate_alignment(const Bits& bits, const PacketSchema& schema, std::size_t residue) {
  const long n = static_cast<long>(bits.size());
  const long h = static_cast<long>(schema.header().size());
  const long fw = static_cast<long>(schema.flag_width());
  const long c = static_cast<long>(schema.chunk_len());
  const long p = static_cast<long>(schema.packet_len());
  const std::size_t chunks = schema.num_chunks();

  Alignment out;
  for (long s = static_cast<long>(residue) - p; s < n; s += p) {
    for (long j = 0; j < h; ++j) {
      const long pos = s + j;
      if (pos < 0 || pos >= n) continue;
      if (bits[static_cast<std::size_t>(pos)] != schema.header()[static_cast<std::size_t>(j)]) return {};
      ++out.header_bits;
    }
  }
  const bool confirmed = out.header_bits >= h;

  long prev_slot = 0;
  std::optional<std::size_t> prev_index;
  long slot = 0;
  for (long s = static_cast<long>(residue) - p; s < n; s += p, ++slot) {
    std::size_t lead = 0, trail = 0;
    const bool has_lead = read_flag(bits, s + h, schema.flag_width(), lead);
    const bool has_trail = read_flag(bits, s + h + fw + c, schema.flag_width(), trail);
    if ((has_lead && lead >= chunks) || (has_trail && trail >= chunks)) return {};
    if (has_lead && has_trail && lead != trail) continue;  // inconsistent flags: payload dropped
    if (!has_lead && !has_trail) continue;

    const std::size_t index = has_lead ? lead : trail;
    if (prev_index) {
      const std::size_t expected = (*prev_index + static_cast<std::size_t>(slot - prev_slot)) % chunks;
      if (expected != index) return {};
    }
    prev_index = index;
    prev_slot = slot;

    if (!confirmed) continue;
    for (long o = 0; o < c; ++o) {
      const long pos = s + h + fw + o;
      if (pos < 0 || pos >= n) continue;
      out.bits.push_back({index * schema.chunk_len() + static_cast<std::size_t>(o),
                          bits[static_cast<std::size_t>(pos)]});
    }
  }
  out.valid = true;
  return out;
}

}  // namespace

PacketSchema::PacketSchema() : PacketSchema(Bits{0, 1, 1, 1, 1, 0}, 1, 10, 2) {}

PacketSchema::PacketSchema(Bits header, std::size_t flag_width, std::size_t chunk_len, std::size_t num_chunks)
    : header_(std::move(header)), flag_width_(flag_width), chunk_len_(chunk_len), num_chunks_(num_chunks) {
  validate();
}

void PacketSchema::validate() const {
  if (header_.empty()) throw SchemaError("header must not be empty");
  if (flag_width_ == 0 || flag_width_ > 16) throw SchemaError("flag width must be in [1, 16]");
  if (chunk_len_ == 0) throw SchemaError("chunk length must be positive");
  if (num_chunks_ == 0) throw SchemaError("at least one chunk is required");
  if (num_chunks_ > (std::size_t{1} << flag_width_)) {
    throw SchemaError("num_chunks exceeds the range of the sequence flag");
  }
  // The header may not re-occur inside the fixed bits that surround it
  // (trailing flag | header | leading flag) for any legal pair of flags.
  const std::size_t h = header_.size();
  for (std::size_t prev = 0; prev < num_chunks_; ++prev) {
    const std::size_t next = (prev + 1) % num_chunks_;
    Bits fixed = flag_bits(prev);
    fixed.insert(fixed.end(), header_.begin(), header_.end());
    const Bits lead = flag_bits(next);
    fixed.insert(fixed.end(), lead.begin(), lead.end());
    for (std::size_t off = 0; off + h <= fixed.size(); ++off) {
      if (off == flag_width_) continue;
      if (std::equal(header_.begin(), header_.end(), fixed.begin() + static_cast<std::ptrdiff_t>(off))) {
        throw SchemaError("header collides with the flag framing at offset " + std::to_string(off));
      }
    }
  }
}

Bits PacketSchema::flag_bits(std::size_t index) const {
  Bits out(flag_width_);
  for (std::size_t j = 0; j < flag_width_; ++j) {
    out[j] = static_cast<std::uint8_t>((index >> (flag_width_ - 1 - j)) & 1u);
  }
  return out;
}

Bits SubPacket::serialize(const PacketSchema& schema) const {
  if (payload.size() != schema.chunk_len()) throw SchemaError("payload length does not match chunk length");
  if (seq_index >= schema.num_chunks()) throw SchemaError("sequence index out of range");
  Bits out = schema.header();
  const Bits flag = schema.flag_bits(seq_index);
  out.insert(out.end(), flag.begin(), flag.end());
  out.insert(out.end(), payload.begin(), payload.end());
  out.insert(out.end(), flag.begin(), flag.end());
  return out;
}

Bits encode_id(const LedId& id, const PacketSchema& schema, std::size_t repetitions) {
  if (id.size() != schema.id_len()) {
    throw SchemaError("id has " + std::to_string(id.size()) + " bits, schema expects " +
                      std::to_string(schema.id_len()));
  }
  if (repetitions == 0) throw ContractViolation("repetitions must be at least 1");
  Bits once;
  once.reserve(schema.stream_len());
  for (std::size_t i = 0; i < schema.num_chunks(); ++i) {
    const auto first = id.bits().begin() + static_cast<std::ptrdiff_t>(i * schema.chunk_len());
    SubPacket sp{i, Bits(first, first + static_cast<std::ptrdiff_t>(schema.chunk_len()))};
    const Bits ser = sp.serialize(schema);
    once.insert(once.end(), ser.begin(), ser.end());
  }
  Bits out;
  out.reserve(once.size() * repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) out.insert(out.end(), once.begin(), once.end());
  return out;
}

bool rotation_unique(const LedId& id, const PacketSchema& schema) {
  const Bits stream = encode_id(id, schema);
  const std::size_t len = stream.size(), p = schema.packet_len();
  const std::size_t h = schema.header().size(), fw = schema.flag_width();
  for (std::size_t r = 1; r < len; ++r) {
    const auto at = [&](std::size_t i) { return stream[(r + i) % len]; };
    Bits other;
    bool framed = true;
    for (std::size_t k = 0; k < schema.num_chunks() && framed; ++k) {
      const std::size_t base = k * p;
      const Bits flag = schema.flag_bits(k);
      for (std::size_t j = 0; j < h && framed; ++j) framed = at(base + j) == schema.header()[j];
      for (std::size_t j = 0; j < fw && framed; ++j) {
        framed = at(base + h + j) == flag[j] && at(base + p - fw + j) == flag[j];
      }
      for (std::size_t j = 0; j < schema.chunk_len(); ++j) other.push_back(at(base + h + fw + j));
    }
    if (framed && other != id.bits()) return false;
  }
  return true;
}

Bits demodulate_frame(std::span<const double> column, double rows_per_bit, const DemodOptions& options) {
  if (!(rows_per_bit >= 2.0)) {
    throw UnsupportedDensity("rows_per_bit " + std::to_string(rows_per_bit) + " is below 2");
  }
  if (column.empty()) throw ContractViolation("empty column profile");

  double contrast = 0;
  const double threshold = two_level_threshold(column, contrast);
  // Without stripes the whole profile is one run, classified absolutely.
  const double cut = contrast < options.min_contrast ? options.global_level : threshold;
  std::vector<std::uint8_t> level(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) level[i] = column[i] > cut;

  // Run-length quantization.
  Bits out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= level.size(); ++i) {
    if (i == level.size() || level[i] != level[start]) {
      const double run = static_cast<double>(i - start);
      const auto count = std::max<long>(1, std::lround(run / rows_per_bit));
      out.insert(out.end(), static_cast<std::size_t>(count), level[start]);
      start = i;
    }
  }
  return out;
}

FrameBits parse_subpackets(const Bits& bits, const PacketSchema& schema) {
  const auto& header = schema.header();
  if (bits.size() < header.size()) return {};

  // Every alignment whose visible header bits all match and add up to at
  // least one header is a candidate, including headers split by the edges.
  std::vector<std::vector<PositionedBit>> valid;
  for (std::size_t r = 0; r < schema.packet_len(); ++r) {
    auto a = evaluate_alignment(bits, schema, r);
    if (a.valid && a.header_bits >= static_cast<long>(header.size())) valid.push_back(std::move(a.bits));
  }
  FrameBits out;
  if (valid.size() == 1) {
    out.bits = std::move(valid.front());
  } else if (valid.size() > 1) {
    out.candidates = std::move(valid);  // ambiguous framing: left to the accumulator
  }
  return out;
}

FusionAccumulator::FusionAccumulator(std::size_t b_full, std::size_t b_ref)
    : counts_(b_full, Tally{0, 0}), b_ref_(b_ref), b_full_(b_full) {
  if (b_full == 0) throw ContractViolation("b_full must be positive");
  if (b_ref == 0) throw ContractViolation("b_ref must be positive");
}

std::size_t FusionAccumulator::threshold() const noexcept { return std::min(b_ref_, k_ * b_full_); }

bool FusionAccumulator::ready() const noexcept { return k_ > 0 && (extend_ || b_cnt_ >= threshold()); }

bool FusionAccumulator::accumulate(const FrameBits& frame) {
  auto check = [&](const std::vector<PositionedBit>& bits) {
    for (const auto& pb : bits) {
      if (pb.position >= b_full_) throw ContractViolation("payload position out of range");
    }
  };
  check(frame.bits);
  for (const auto& c : frame.candidates) check(c);
  ++k_;
  add_bits(frame.bits);
  if (!frame.candidates.empty()) pending_.push_back(frame.candidates);
  resolve_pending();
  return ready();
}

void FusionAccumulator::add_bits(const std::vector<PositionedBit>& bits) {
  for (const auto& pb : bits) ++counts_[pb.position][pb.value ? 1 : 0];
  b_cnt_ += bits.size();
}

// A candidate scores +1 for every bit matching a strict majority and -1 for
// every bit against one. A pending frame is released when its best candidate
// beats every other one by at least two.
void FusionAccumulator::resolve_pending() {
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      std::vector<long> score;
      for (const auto& cand : *it) {
        long s = 0;
        for (const auto& pb : cand) {
          const auto [zeros, ones] = counts_[pb.position];
          if (zeros == ones) continue;
          s += ((ones > zeros) == (pb.value != 0)) ? 1 : -1;
        }
        score.push_back(s);
      }
      const auto best = std::max_element(score.begin(), score.end());
      bool clear = *best > 0;
      for (auto s = score.begin(); s != score.end(); ++s) {
        if (s != best && *s + 2 > *best) clear = false;
      }
      if (!clear) continue;
      add_bits((*it)[static_cast<std::size_t>(best - score.begin())]);
      pending_.erase(it);
      progress = true;
      break;
    }
  }
}

void FusionAccumulator::reset() {
  std::fill(counts_.begin(), counts_.end(), Tally{0, 0});
  b_cnt_ = 0;
  k_ = 0;
  extend_ = false;
  pending_.clear();
}

VoteResult majority_vote(FusionAccumulator& acc) {
  VoteResult out;
  out.frame_interval = acc.k_;
  out.b_cnt = acc.b_cnt_;
  Bits id(acc.b_full_);
  for (std::size_t i = 0; i < acc.b_full_; ++i) {
    const auto [zeros, ones] = acc.counts_[i];
    if (zeros == ones) {
      out.unresolved.push_back(i);
    } else {
      id[i] = ones > zeros;
    }
  }
  if (out.unresolved.empty()) {
    out.id = LedId(std::move(id));
    acc.reset();
  } else {
    acc.extend_ = true;
  }
  return out;
}

StreamDecoder::StreamDecoder(DecoderConfig config)
    : config_(std::move(config)), acc_(config_.schema.id_len(), config_.b_ref) {}

std::optional<DecodeResult> StreamDecoder::push_bits(const Bits& raw) {
  const std::size_t index = frames_++;
  if (!acc_.accumulate(parse_subpackets(raw, config_.schema))) return std::nullopt;
  const std::size_t k = acc_.k();
  auto vote = majority_vote(acc_);
  if (!vote.id) {
    events_.push_back({index, k, vote.b_cnt, "", "unresolved"});
    return std::nullopt;
  }
  events_.push_back({index, k, vote.b_cnt, vote.id->hex(), "decoded"});
  return DecodeResult{*vote.id, vote.frame_interval, frames_, vote.b_cnt};
}

std::optional<DecodeResult> StreamDecoder::push_profile(std::span<const double> column, double rows_per_bit) {
  return push_bits(demodulate_frame(column, rows_per_bit, config_.demod));
}

void StreamDecoder::restart() {
  acc_.reset();
  frames_ = 0;
}

std::size_t default_frame_budget(std::size_t b_ref, std::size_t b_full) {
  return 10 * std::max<std::size_t>(1, (b_ref + b_full - 1) / b_full);
}

DecodeResult decode_bit_frames(std::span<const Bits> frames, const PacketSchema& schema, std::size_t b_ref,
                               std::optional<std::size_t> max_frames) {
  StreamDecoder dec({schema, b_ref, {}});
  const std::size_t budget = max_frames.value_or(default_frame_budget(b_ref, schema.id_len()));
  for (std::size_t i = 0; i < frames.size() && i < budget; ++i) {
    if (auto r = dec.push_bits(frames[i])) return *r;
  }
  throw DecodeTimeout(dec.frames_consumed(), dec.accumulator().counts());
}

DecodeResult decode_stream(std::span<const std::vector<double>> frames, const PacketSchema& schema,
                           std::size_t b_ref, double rows_per_bit, std::optional<std::size_t> max_frames,
                           const DemodOptions& demod) {
  StreamDecoder dec({schema, b_ref, demod});
  const std::size_t budget = max_frames.value_or(default_frame_budget(b_ref, schema.id_len()));
  for (std::size_t i = 0; i < frames.size() && i < budget; ++i) {
    if (auto r = dec.push_profile(frames[i], rows_per_bit)) return *r;
  }
  throw DecodeTimeout(dec.frames_consumed(), dec.accumulator().counts());
}

}  // namespace vlpdr
