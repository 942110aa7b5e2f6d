#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

namespace lyapobs {

// Worker count used by parallel_for. Defaults to the hardware concurrency.
void set_thread_count(unsigned count);
unsigned thread_count();

// Runs body(i) for i in [0, count). Each index is handled exactly once; the
// first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Results are stored by index, so the output is independent of scheduling.
template <class F>
auto parallel_map(std::size_t count, F&& fn) {
  using T = std::invoke_result_t<F&, std::size_t>;
  std::vector<T> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

// Pairwise summation over a fixed tree: the rounding pattern depends only on
// the length of the input.
double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);

// log(mean(exp(v))) without overflow.
double log_mean_exp(std::span<const double> values);

double median(std::vector<double> values);

}  // namespace lyapobs
