#pragma once

#include <json.hpp>

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "taxonav/search.hpp"

namespace taxonav {

// Queries file: JSONL {"query_id", "query", optional "context": {"kind", "text"}}.
std::vector<Query> queries_from_records(const std::vector<nlohmann::json>& records);
std::vector<Query> queries_from_file(const std::string& path);

// Maps `fn` over the queries on `workers` threads (0 picks the hardware
// concurrency). Output order always equals input order; if any call throws,
// the exception for the smallest query index is rethrown once the pool
// drains, so failures are deterministic too.
template <typename R>
std::vector<R> parallel_map(const std::vector<Query>& queries,
                            const std::function<R(const Query&)>& fn, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<R> results(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());
  std::atomic<size_t> next{0};

  auto work = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= queries.size()) break;
      try {
        results[i] = fn(queries[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (workers == 1 || queries.size() <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

using QueryRunner = std::function<SearchResult(const Query&)>;

std::vector<SearchResult> run_batch(const std::vector<Query>& queries, const QueryRunner& run,
                                    unsigned workers = 0);

}  // namespace taxonav
