#include <cstdlib>
#include <iostream>

#include "upss/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  upss::cli::CliConfig config;
  try {
    if (const char* path = std::getenv("UPSS_CONFIG")) config = upss::cli::load_config(path);
  } catch (const upss::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return upss::cli::exit_code(e.code());
  }
  auto outcome = upss::cli::dispatch(args, config);
  std::cout << outcome.out << std::flush;
  std::cerr << outcome.err << std::flush;
  return outcome.code;
}
