#include <cstdlib>
#include <iostream>
#include <thread>

#include "wallchain/selftest.hpp"

int main(int argc, char** argv) {
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    if (argc > 1) jobs = static_cast<unsigned>(std::max(1, std::atoi(argv[1])));
    const auto results = wallchain::run_selftest(std::cout, {jobs});
    std::size_t failed = 0;
    for (const auto& r : results) failed += !r.passed;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
