#include "stadr/parallel.hpp"

#include <cstdlib>
#include <string>

namespace stadr {

int default_workers() {
  if (const char* env = std::getenv("STADR_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace stadr
