// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include "casp/common.hpp"

#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace casp {

std::string Rng::save_state() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void Rng::load_state(const std::string& s) {
  std::istringstream is(s);
  is >> eng_;
  if (is.fail()) throw IoError("malformed rng state");
}

bool debug_logging_enabled() {
  static const bool on = [] {
    const char* env = std::getenv("CASP_DEBUG");
    return env != nullptr && *env != '\0' && *env != '0';
  }();
  return on;
}

void log_debug(const std::string& msg) {
  if (debug_logging_enabled()) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

int worker_count() {
  static const int n = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("CASP_THREADS"); env != nullptr && *env != '\0') {
      int cap = std::atoi(env);
      if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
  }();
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = static_cast<std::size_t>(worker_count());
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  const std::size_t used = workers < n ? workers : n;
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += used) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace casp
