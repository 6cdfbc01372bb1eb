#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "perturblab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const auto results = perturblab::cli::run_acceptance(only);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s\n", perturblab::cli::format_line(r).c_str());
    if (!r.passed) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed ? perturblab::cli::kAcceptanceFailure : 0;
}
