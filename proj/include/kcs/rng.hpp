#pragma once

#include <cstdint>

namespace kcs {

// Counter-based generator: draw i of a stream is a fixed hash of (key, i),
// so substreams can be split from a master seed and consumed in any order
// across workers without shared state. Normals come from Box-Muller with the
// second value cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent substream; splitting is deterministic in (key, stream).
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with a full 53-bit mantissa.
  double next_uniform();

  // Uniform on (0, 1]; used where a log of the draw is taken.
  double next_uniform_pos();

  // Standard normal.
  double next_normal();

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kcs
