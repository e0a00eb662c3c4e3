// Copyright 2026 The entmark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <sodium.h>

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entmark/common.hpp"
#include "entmark/rng.hpp"

namespace entmark {

// Identifies the key derivation (BLAKE2b-256 over the seed block) and the
// counter-mode stream (original ChaCha20, 64-bit block counter, zero nonce).
inline constexpr std::string_view kPrfId = "blake2b256+chacha20/v1";

using PrfKey = std::array<std::uint8_t, 32>;
using Salt = std::vector<std::uint8_t>;

namespace detail {

inline void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialize");
    return true;
  }();
  (void)ready;
}

inline void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t load_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xF];
  }
  return out;
}

inline Salt salt_from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw ValidationError("salt hex must have an even number of digits");
  Salt out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ValidationError("salt is not valid hex");
    out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  return out;
}

// The unwatermarked prefix that keys everything after it.
struct SeedBlock {
  TokenSeq tokens;
  Salt salt;

  // len(salt) ‖ salt ‖ len(tokens) ‖ tokens, lengths as u64 and ids as u32,
  // all little-endian.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(16 + salt.size() + 4 * tokens.size());
    detail::append_u64_le(out, salt.size());
    out.insert(out.end(), salt.begin(), salt.end());
    detail::append_u64_le(out, tokens.size());
    for (TokenId t : tokens) {
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(t >> (8 * i)));
    }
    return out;
  }
};

inline PrfKey derive_prf_key(const SeedBlock& seed) {
  detail::ensure_sodium();
  const auto message = seed.serialize();
  PrfKey key{};
  crypto_generichash(key.data(), key.size(), message.data(), message.size(), nullptr, 0);
  return key;
}

// Stateless keyed uniform stream; caches the most recent ChaCha20 block so
// sequential reads cost one block per eight values.
class KeyStream {
 public:
  explicit KeyStream(const PrfKey& key) : key_(key) { detail::ensure_sodium(); }

  double uniform(std::uint64_t index) {
    const std::uint64_t block = index / kWordsPerBlock;
    if (!cached_ || block != cached_block_) load(block);
    const std::uint64_t word = detail::load_u64_le(buffer_.data() + 8 * (index % kWordsPerBlock));
    return static_cast<double>(word >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t kWordsPerBlock = 8;

  void load(std::uint64_t block) {
    static constexpr std::array<std::uint8_t, 64> kZeros{};
    static constexpr std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> kNonce{};
    crypto_stream_chacha20_xor_ic(buffer_.data(), kZeros.data(), kZeros.size(), kNonce.data(), block, key_.data());
    cached_block_ = block;
    cached_ = true;
  }

  PrfKey key_;
  std::array<std::uint8_t, 64> buffer_{};
  std::uint64_t cached_block_ = 0;
  bool cached_ = false;
};

inline double uniform_stream(const PrfKey& key, std::uint64_t index) { return KeyStream(key).uniform(index); }

inline unsigned code_length_for(std::size_t vocab_size) {
  return vocab_size < 2 ? 0u : static_cast<unsigned>(std::bit_width(vocab_size - 1));
}

// Position i owns stream counters [i*stride, (i+1)*stride) with
// stride = L + N + 1: offset 0 is the ITS uniform, offsets 1..N drive the
// permutation shuffle and offsets N+1..N+L are the BS bit uniforms.
inline std::uint64_t counter_stride(std::size_t vocab_size) { return code_length_for(vocab_size) + vocab_size + 1; }

struct ItsKeyElement {
  double u = 0.0;
  std::vector<std::uint32_t> rank;  // rank[token] in 0..N-1
};

struct BsKeyElement {
  std::vector<double> u;  // one uniform per code bit
};

// Fisher-Yates over the rank table; draw(i) must return a uniform index in [0, i].
template <typename Draw>
void shuffle_ranks(std::span<std::uint32_t> rank, Draw&& draw) {
  for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = rank.size(); i-- > 1;) {
    const std::size_t j = draw(i);
    std::swap(rank[i], rank[j]);
  }
}

namespace detail {

inline void fill_its(KeyStream& stream, std::uint64_t position, std::size_t vocab_size, double& u,
                     std::span<std::uint32_t> rank) {
  const std::uint64_t base = position * counter_stride(vocab_size);
  u = stream.uniform(base);
  shuffle_ranks(rank, [&](std::size_t i) {
    const double v = stream.uniform(base + 1 + i);
    return std::min(static_cast<std::size_t>(v * static_cast<double>(i + 1)), i);
  });
}

inline void fill_bs(KeyStream& stream, std::uint64_t position, std::size_t vocab_size, std::span<double> u) {
  const std::uint64_t base = position * counter_stride(vocab_size) + vocab_size + 1;
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = stream.uniform(base + j);
}

}  // namespace detail

inline ItsKeyElement its_element(const PrfKey& key, std::uint64_t position, std::size_t vocab_size) {
  require(vocab_size >= 1, "its_element: empty vocabulary");
  KeyStream stream(key);
  ItsKeyElement e;
  e.rank.resize(vocab_size);
  detail::fill_its(stream, position, vocab_size, e.u, e.rank);
  return e;
}

inline BsKeyElement bs_element(const PrfKey& key, std::uint64_t position, std::size_t vocab_size) {
  KeyStream stream(key);
  BsKeyElement e;
  e.u.resize(code_length_for(vocab_size));
  detail::fill_bs(stream, position, vocab_size, e.u);
  return e;
}

enum class KeyKind { kIts, kBs };

inline std::string_view to_string(KeyKind kind) { return kind == KeyKind::kIts ? "its" : "bs"; }

inline KeyKind parse_key_kind(std::string_view name) {
  if (name == "its") return KeyKind::kIts;
  if (name == "bs") return KeyKind::kBs;
  throw ValidationError("unknown key kind: " + std::string(name));
}

// Homogeneous key sequence stored flat: ITS elements as (u, rank table),
// BS elements as L uniforms each.
class KeySequence {
 public:
  struct ItsView {
    double u;
    std::span<const std::uint32_t> rank;
  };

  KeySequence(KeyKind kind, std::size_t vocab_size) : kind_(kind), vocab_size_(vocab_size) {
    require(vocab_size >= 1, "key sequence needs a vocabulary");
    code_length_ = code_length_for(vocab_size);
  }

  KeyKind kind() const { return kind_; }
  std::size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }
  std::size_t vocab_size() const { return vocab_size_; }
  unsigned code_length() const { return code_length_; }

  ItsView its(std::size_t i) const {
    require(kind_ == KeyKind::kIts, "key sequence is not ITS");
    return {u_[i], std::span<const std::uint32_t>(ranks_).subspan(i * vocab_size_, vocab_size_)};
  }

  std::span<const double> bs(std::size_t i) const {
    require(kind_ == KeyKind::kBs, "key sequence is not BS");
    return std::span<const double>(u_).subspan(i * code_length_, code_length_);
  }

  void push_back(const ItsKeyElement& e) {
    require(kind_ == KeyKind::kIts, "key sequence is not ITS");
    require(e.rank.size() == vocab_size_, "ITS element has the wrong vocabulary size");
    u_.push_back(e.u);
    ranks_.insert(ranks_.end(), e.rank.begin(), e.rank.end());
    ++n_;
  }

  void push_back(const BsKeyElement& e) {
    require(kind_ == KeyKind::kBs, "key sequence is not BS");
    require(e.u.size() == code_length_, "BS element has the wrong code length");
    u_.insert(u_.end(), e.u.begin(), e.u.end());
    ++n_;
  }

  // Appends one element and hands back writable storage for it.
  std::pair<double*, std::span<std::uint32_t>> emplace_its() {
    u_.push_back(0.0);
    ranks_.resize(ranks_.size() + vocab_size_);
    ++n_;
    return {&u_.back(), std::span<std::uint32_t>(ranks_).subspan((n_ - 1) * vocab_size_, vocab_size_)};
  }

  std::span<double> emplace_bs() {
    u_.resize(u_.size() + code_length_);
    ++n_;
    return std::span<double>(u_).subspan((n_ - 1) * code_length_, code_length_);
  }

  void reserve(std::size_t n) {
    u_.reserve(kind_ == KeyKind::kIts ? n : n * code_length_);
    if (kind_ == KeyKind::kIts) ranks_.reserve(n * vocab_size_);
  }

 private:
  KeyKind kind_;
  std::size_t vocab_size_;
  unsigned code_length_ = 0;
  std::size_t n_ = 0;
  std::vector<double> u_;
  std::vector<std::uint32_t> ranks_;
};

// Elements 0..n-1 of the seed-derived key sequence.
inline KeySequence derive_key_sequence(const PrfKey& key, KeyKind kind, std::size_t n, std::size_t vocab_size) {
  KeySequence seq(kind, vocab_size);
  seq.reserve(n);
  KeyStream stream(key);
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == KeyKind::kIts) {
      auto [u, rank] = seq.emplace_its();
      detail::fill_its(stream, i, vocab_size, *u, rank);
    } else {
      detail::fill_bs(stream, i, vocab_size, seq.emplace_bs());
    }
  }
  return seq;
}

// Fresh i.i.d. null keys from the harness RNG, independent of any seed.
inline KeySequence resample_key_sequence(KeyKind kind, std::size_t n, std::size_t vocab_size, Rng& rng) {
  KeySequence seq(kind, vocab_size);
  seq.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (kind == KeyKind::kIts) {
      auto [u, rank] = seq.emplace_its();
      *u = rng.uniform();
      shuffle_ranks(rank, [&](std::size_t k) { return static_cast<std::size_t>(rng.below(k + 1)); });
    } else {
      for (double& v : seq.emplace_bs()) v = rng.uniform();
    }
  }
  return seq;
}

}  // namespace entmark
