// Benchmark: OpenMP-parallel per-unit scoring vs the serial reference.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dres/extraction.hpp"
#include "dres/scoring.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double run_ms(const std::function<std::vector<dres::UnitScores>()>& fn,
              std::vector<dres::UnitScores>& out) {
  const auto t0 = Clock::now();
  out = fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n_units = argc > 1 ? std::stoul(argv[1]) : 400;
  const std::size_t tokens_per_unit = argc > 2 ? std::stoul(argv[2]) : 120;

  static const std::vector<std::string> vocab = {"i", "think", "the", "dog", "ran",
                                                 "home", "you", "know", "today"};
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<dres::UtteranceTuple> tuples;
  tuples.reserve(n_units);
  for (std::size_t u = 0; u < n_units; ++u) {
    std::vector<dres::Token> fluent;
    for (std::size_t i = 0; i < tokens_per_unit; ++i) {
      fluent.push_back({vocab[word(rng)], i, false});
    }
    tuples.push_back(dres::inject_disfluencies(fluent, rng(), {0.1, 0.2, 0.1},
                                               "bench:" + std::to_string(u)));
  }

  std::vector<dres::ScoringTask> tasks;
  tasks.reserve(n_units);
  for (const auto& tuple : tuples) {
    dres::ScoringTask task;
    task.unit_id = tuple.id;
    task.gold = tuple.disfluent;
    task.tags = tuple.tags;
    task.trees = {&tuple.tree};
    // Imperfect hypothesis: keep fluent tokens, occasionally leak a
    // disfluent one or drop a fluent one.
    for (std::size_t i = 0; i < tuple.disfluent.size(); ++i) {
      const bool fluent_tok = tuple.tags[i] == dres::TokenTag::Fluent;
      if (fluent_tok ? coin(rng) > 0.05 : coin(rng) < 0.15) {
        task.hyp.push_back(tuple.disfluent[i].surface);
      }
    }
    tasks.push_back(std::move(task));
  }

  std::vector<dres::UnitScores> serial, parallel;
  const double serial_ms = run_ms([&] { return dres::score_tasks_serial(tasks); }, serial);
  const double parallel_ms = run_ms([&] { return dres::score_tasks(tasks); }, parallel);

  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    if (serial[i].e.tp != parallel[i].e.tp || serial[i].e.fp != parallel[i].e.fp ||
        serial[i].e.fn != parallel[i].e.fn || serial[i].z.removed_i != parallel[i].z.removed_i) {
      ++mismatches;
    }
  }

#ifdef _OPENMP
  std::cout << "threads:      " << omp_get_max_threads() << "\n";
#else
  std::cout << "threads:      1 (OpenMP disabled)\n";
#endif
  std::cout << "units:        " << n_units << " x " << tokens_per_unit << " tokens\n"
            << "serial:       " << serial_ms << " ms\n"
            << "parallel:     " << parallel_ms << " ms\n"
            << "speedup:      " << (parallel_ms > 0 ? serial_ms / parallel_ms : 0.0) << "x\n"
            << "mismatches:   " << mismatches << "\n";
  return mismatches == 0 ? 0 : 1;
}
