#include <string>
#include <vector>

#include "rcelab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return rcelab::cli::dispatch(args);
}
