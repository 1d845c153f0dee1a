#ifndef ERGORATE_MONTECARLO_HPP
#define ERGORATE_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ergorate/chain.hpp"
#include "ergorate/parallel.hpp"
#include "ergorate/semigroup.hpp"

namespace ergorate {

/// Counter-based stream: output k is a SplitMix64 finalization of
/// key + k * golden_gamma, with the key derived from (seed, stream).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + kGamma))) {}

  std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

template <typename Scalar>
struct TrajectoryEnsemble {
  Vector<Scalar> initial;  // law of X_0
  std::vector<Scalar> times;
  std::size_t n_paths;
  std::uint64_t seed;
  std::vector<std::uint32_t> occupancy;  // path-major, n_paths x times.size()
  // Sojourns started before the horizon, each followed to completion.
  Vector<Scalar> holding_total;
  Vector<Scalar> holding_sq_total;
  std::vector<std::uint64_t> holding_count;

  std::uint32_t state_at(std::size_t path, std::size_t k) const {
    return occupancy[path * times.size() + k];
  }

  Vector<Scalar> empirical_law(std::size_t k) const {
    Vector<Scalar> law = Vector<Scalar>::Zero(initial.size());
    for (std::size_t p = 0; p < n_paths; ++p) law(state_at(p, k)) += Scalar(1);
    return law / Scalar(n_paths);
  }

  Scalar mean_holding_time(Index state) const {
    return holding_total(state) / Scalar(holding_count[static_cast<std::size_t>(state)]);
  }

  Scalar holding_time_stderr(Index state) const {
    const Scalar m = holding_count[static_cast<std::size_t>(state)];
    const Scalar mean = holding_total(state) / m;
    const Scalar var = holding_sq_total(state) / m - mean * mean;
    return std::sqrt(std::max(var, Scalar(0)) / m);
  }
};

/// Exponential-holding-time simulation of the chain from an initial law,
/// recording the state at each grid time. Paths are grouped in a fixed number
/// of blocks so the result does not depend on the worker count.
template <typename Scalar>
TrajectoryEnsemble<Scalar> sample_paths(const ChainSpec<Scalar>& spec,
                                        const Vector<Scalar>& initial,
                                        std::span<const Scalar> times, std::size_t n_paths,
                                        std::uint64_t seed) {
  const Index n = spec.size();
  if (n_paths < 1) throw Error(ErrorKind::InvalidInput, "n_paths must be at least 1");
  if (times.empty()) throw Error(ErrorKind::InvalidInput, "time grid is empty");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= Scalar(0)) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw Error(ErrorKind::InvalidInput, "times must be non-negative and increasing");
    }
  }
  if (initial.size() != n || initial.minCoeff() < Scalar(0) ||
      std::abs(initial.sum() - Scalar(1)) > Scalar(1e-10)) {
    throw Error(ErrorKind::InvalidDistribution, "initial law must be a probability vector");
  }

  const auto& q = spec.rate_matrix.matrix();
  std::vector<double> exit_rate(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> jump_cdf(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double out = -static_cast<double>(q(i, i));
    exit_rate[static_cast<std::size_t>(i)] = out;
    auto& cdf = jump_cdf[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (Index j = 0; j < n; ++j) {
      acc += (j == i) ? 0.0 : static_cast<double>(q(i, j)) / out;
      cdf.push_back(acc);
    }
  }
  std::vector<double> start_cdf;
  {
    double acc = 0.0;
    for (Index j = 0; j < n; ++j) start_cdf.push_back(acc += static_cast<double>(initial(j)));
  }
  auto draw = [](const std::vector<double>& cdf, double u) {
    const double scaled = u * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), scaled);
    // Skip zero-probability entries sharing the same cumulative value.
    return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
  };

  const std::size_t n_times = times.size();
  const double horizon = static_cast<double>(times.back());
  TrajectoryEnsemble<Scalar> ens{initial, {times.begin(), times.end()}, n_paths, seed,
                                 std::vector<std::uint32_t>(n_paths * n_times),
                                 Vector<Scalar>::Zero(n), Vector<Scalar>::Zero(n),
                                 std::vector<std::uint64_t>(static_cast<std::size_t>(n), 0)};

  const std::size_t blocks = std::min<std::size_t>(n_paths, 256);
  struct Stats {
    std::vector<double> total, sq;
    std::vector<std::uint64_t> count;
  };
  std::vector<Stats> block_stats(blocks);

  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      Stats stats{std::vector<double>(static_cast<std::size_t>(n), 0.0),
                  std::vector<double>(static_cast<std::size_t>(n), 0.0),
                  std::vector<std::uint64_t>(static_cast<std::size_t>(n), 0)};
      const std::size_t p_begin = n_paths * b / blocks;
      const std::size_t p_end = n_paths * (b + 1) / blocks;
      for (std::size_t p = p_begin; p < p_end; ++p) {
        CounterRng rng(seed, p);
        std::uint32_t state = draw(start_cdf, rng.uniform());
        double clock = 0.0;
        std::size_t k = 0;
        while (true) {
          const double hold = rng.exponential(exit_rate[state]);
          const double leave = clock + hold;
          if (clock <= horizon) {
            stats.total[state] += hold;
            stats.sq[state] += hold * hold;
            ++stats.count[state];
          }
          while (k < n_times && static_cast<double>(times[k]) < leave) {
            ens.occupancy[p * n_times + k] = state;
            ++k;
          }
          if (k == n_times) break;
          state = draw(jump_cdf[state], rng.uniform());
          clock = leave;
        }
      }
      block_stats[b] = std::move(stats);
    }
  });

  for (const auto& stats : block_stats) {
    for (Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      ens.holding_total(i) += Scalar(stats.total[u]);
      ens.holding_sq_total(i) += Scalar(stats.sq[u]);
      ens.holding_count[u] += stats.count[u];
    }
  }
  return ens;
}

template <typename Scalar>
TrajectoryEnsemble<Scalar> sample_paths(const ChainSpec<Scalar>& spec, Index start,
                                        std::span<const Scalar> times, std::size_t n_paths,
                                        std::uint64_t seed) {
  if (start < 0 || start >= spec.size()) {
    throw Error(ErrorKind::InvalidInput, "start state out of range");
  }
  return sample_paths(spec, Vector<Scalar>(Vector<Scalar>::Unit(spec.size(), start)), times,
                      n_paths, seed);
}

template <typename Scalar>
struct FnormEstimate {
  Scalar t;
  Scalar estimate;
  Scalar std_error;
};

/// Plug-in f-norm of (empirical law - pi) per grid time. The standard error
/// linearizes |.| at the observed signs and uses the multinomial covariance.
template <typename Scalar>
std::vector<FnormEstimate<Scalar>> empirical_fnorm(const TrajectoryEnsemble<Scalar>& ens,
                                                   const Distribution<Scalar>& pi,
                                                   const WeightFunction<Scalar>& f) {
  std::vector<FnormEstimate<Scalar>> out;
  out.reserve(ens.times.size());
  for (std::size_t k = 0; k < ens.times.size(); ++k) {
    const Vector<Scalar> law = ens.empirical_law(k);
    const Vector<Scalar> diff = law - pi.values();
    Scalar first(0), second(0);
    for (Index j = 0; j < law.size(); ++j) {
      const Scalar sign = diff(j) > Scalar(0) ? Scalar(1) : (diff(j) < Scalar(0) ? Scalar(-1) : Scalar(0));
      const Scalar w = f(j) * sign;
      first += w * law(j);
      second += w * w * law(j);
    }
    const Scalar var = std::max(second - first * first, Scalar(0)) / Scalar(ens.n_paths);
    out.push_back({ens.times[k], f_norm(diff, f), std::sqrt(var)});
  }
  return out;
}

}  // namespace ergorate

#endif  // ERGORATE_MONTECARLO_HPP
