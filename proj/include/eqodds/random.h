#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace eqodds {

// Seeded 64-bit stream with distribution helpers whose output depends only on
// the seed (no implementation-defined std:: distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Marsaglia's polar method.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by Rng::below.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

// Runs trial(i, seed_i) for i in [0, trials) with seed_i = base_seed + i,
// spreading trials over hardware threads. Results are indexed by trial, so the
// output does not depend on scheduling.
template <class Fn>
auto parallel_trials(std::size_t trials, std::uint64_t base_seed, Fn trial)
    -> std::vector<decltype(trial(std::size_t{}, std::uint64_t{}))> {
  using R = decltype(trial(std::size_t{}, std::uint64_t{}));
  std::vector<R> out(trials);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), trials));
  if (workers <= 1) {
    for (std::size_t i = 0; i < trials; ++i) out[i] = trial(i, base_seed + i);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < trials; i += workers) out[i] = trial(i, base_seed + i);
      });
    }
  }  // joined here
  return out;
}

}  // namespace eqodds
