#pragma once

#include <algorithm>
#include <exception>
#include <thread>

namespace mdr {

template <typename Decide>
std::vector<RerankResult> rerank_batch(std::span<const NBestList> lists, Decide&& decide_fn,
                                       const RerankConfig& config, const ModelRegistry& registry, unsigned jobs) {
  std::vector<RerankResult> out(lists.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(lists.size(), 1))));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = rerank(lists[i], decide_fn(i), config, registry);
  };
  if (jobs == 1) {
    work(0, lists.size());
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(jobs);
  const std::size_t chunk = (lists.size() + jobs - 1) / jobs;
  for (unsigned t = 0; t < jobs; ++t) {
    const std::size_t begin = std::min(lists.size(), t * chunk);
    const std::size_t end = std::min(lists.size(), begin + chunk);
    threads.emplace_back([&, t, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mdr
