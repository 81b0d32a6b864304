#include <iostream>

#include "spinesim/cli.hpp"

int main(int argc, char** argv)
{
    return spinesim::cli::run(argc, argv, std::cout, std::cerr);
}
