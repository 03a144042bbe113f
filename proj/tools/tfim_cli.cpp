#include "tfim/cli.hpp"

int main(int argc, char** argv)
{
    return tfim::cli::run(argc, argv);
}
