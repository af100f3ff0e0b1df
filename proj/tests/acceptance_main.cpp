// End-to-end verification binary: runs every criterion and prints one
// pass/fail line each. Exits nonzero when any criterion fails.

#include <iostream>

#include "biflab/selftest.hpp"

int main() {
    const auto results = biflab::run_verification();
    const bool ok = biflab::print_verification(results, std::cout);
    return ok ? 0 : 1;
}
