#include <string>
#include <vector>

#include "istd/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return istd::cli::run(args);
}
