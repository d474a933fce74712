#include "bunca/parallel.hpp"

#include <cstdlib>
#include <string>

namespace bunca {

std::size_t thread_count() {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("BUNCA_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) return std::min<std::size_t>(hw, static_cast<std::size_t>(cap));
    } catch (const std::exception&) {
      // unparsable cap: fall back to hardware concurrency
    }
  }
  return hw;
}

}  // namespace bunca
