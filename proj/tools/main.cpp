#include <vector>

#include "biflab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return biflab::dispatch(args);
}
