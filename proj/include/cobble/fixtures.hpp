#pragma once

#include <string>
#include <vector>

namespace cobble {

// A benchmark program. Exact fixtures assert the published cost numbers;
// self-defined ones assert internal consistency and cost-ordering only.
struct BenchFixture {
  std::string name;
  std::string source;
  bool exact = false;
  double queries_unopt = 0.0, subnorm_unopt = 0.0;
  double queries_opt = 0.0, subnorm_opt = 0.0;
};

const std::vector<BenchFixture>& bench_fixtures();
const BenchFixture& fixture(const std::string& name);

// Expanded monomial program for the degree-n Chebyshev polynomial of X,
// used by the compile-time scaling benchmark.
std::string chebyshev_program(int n);

}  // namespace cobble
