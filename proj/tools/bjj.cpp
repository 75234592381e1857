#include <string>
#include <vector>

#include "bjj/cli.hpp"

int main(int argc, char** argv) {
  return bjj::cli::run(std::vector<std::string>(argv, argv + argc));
}
