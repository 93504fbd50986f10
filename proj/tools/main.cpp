#include "cli.hpp"

#include <malloc.h>

#include <iostream>

int main(int argc, char** argv) {
  // Eigen temporaries are large and short-lived; keep glibc from mapping and
  // unmapping them on every call.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  std::vector<std::string> args(argv, argv + argc);
  return taylorcl::cli::main(args, std::cout, std::cerr);
}
