#include <string>
#include <vector>

#include "cibm/runner.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cibm::run_cli(args);
}
