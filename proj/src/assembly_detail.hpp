#pragma once

// Element-parallel evaluation with sequential, element-ordered scatter. The
// local work may run on several threads; accumulation into global storage is
// always performed in element order, so results are bit-identical for any
// worker count.

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "bgs/forms.hpp"

namespace bgs::fem::detail {

template <class Local, class Fn>
std::vector<Local> element_locals(const FunctionSpaces& spaces, Fn&& fn) {
  const std::size_t n = spaces.elements.size();
  std::vector<Local> out(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(spaces.threads, n));
  if (workers == 1) {
    for (std::size_t e = 0; e < n; ++e) fn(e, out[e]);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        for (std::size_t e = begin; e < end; ++e) fn(e, out[e]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

}  // namespace bgs::fem::detail
