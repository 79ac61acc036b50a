#include "egi/parallel.hpp"

#include <cstdlib>

namespace egi {

int worker_count() {
    if (const char* env = std::getenv("EGI_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace egi
