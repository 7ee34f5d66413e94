#pragma once

#include <array>
#include <cstdint>

namespace perpetuity {

// Identity of a random stream. Streams are derived, not advanced: the state
// is a hash of (master_seed, stream_id), so replica k can be simulated on any
// worker, in any order, and reproduce bit-identically.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

// xoshiro256++ with splitmix64 seeding over (master_seed, stream_id).
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);
  explicit RngStream(RngSpec spec) : RngStream(spec.master_seed, spec.stream_id) {}

  std::uint64_t next_u64();

  double uniform();       // [0, 1)
  double uniform_open();  // (0, 1)
  bool bernoulli(double p);

  double normal();                  // standard normal (Box-Muller)
  double exponential(double rate);  // mean 1/rate
  double gamma(double shape);       // unit scale, any shape > 0

 private:
  std::array<std::uint64_t, 4> state_;
};

}  // namespace perpetuity
