#include "guanzero/parallel.h"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace guanzero {

int worker_threads(int requested) {
  int n = std::max(1, requested);
  if (const char* env = std::getenv("GUANZERO_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) n = std::min(n, cap);
    } catch (const std::exception&) {
      // Ignore malformed values.
    }
  }
  return n;
}

}  // namespace guanzero
