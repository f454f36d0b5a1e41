#include <cstdlib>
#include <iostream>

#include "smst/cli/cli.hpp"

int main(int argc, char** argv) {
    const char* env = std::getenv("SMST_OUT");
    return smst::cli::run(argc, argv, std::cout, std::cerr, env ? env : "");
}
