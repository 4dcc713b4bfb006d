#include <iostream>

#include "vitalcam/cli.hpp"

int main(int argc, char** argv) {
    return vitalcam::cli::run(argc, argv, std::cout, std::cerr);
}
