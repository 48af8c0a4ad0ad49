// SPDX-License-Identifier: Apache-2.0
#include "synthpose/parallel.hpp"

#include <cstdlib>
#include <string>

namespace synthpose {

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GEN4D_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace synthpose
