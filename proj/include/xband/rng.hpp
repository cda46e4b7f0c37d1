#pragma once

#include <array>
#include <cstdint>

namespace xband {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The sequence is a pure function of
/// (seed, stream id), so any decomposition of work over streams is
/// reproducible regardless of how many threads consume them.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Uniform integer in [0, n).
  int below(int n);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_ = 0;
  bool has_spare_ = false;
};

/// Substream families. Distinct purposes never share a stream id.
enum class Purpose : std::uint64_t {
  symbols = 1,
  continuous_outer = 2,
  continuous_inner = 3,
  shaping_init = 4,
  grad_check = 5,
  test = 15,
};

constexpr std::uint64_t stream_id(Purpose purpose, std::uint64_t index) {
  return (static_cast<std::uint64_t>(purpose) << 56) | (index & ((std::uint64_t{1} << 56) - 1));
}

}  // namespace xband
