#include <cstdlib>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> env_seed;
  if (const char* seed = std::getenv("NMSP_SEED")) env_seed = seed;
  return nmsp::cli::run(args, std::cout, std::cerr, env_seed);
}
