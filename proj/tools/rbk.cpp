#include "rbk/cli.hpp"

int main(int argc, char** argv)
{
    return rbk::cli::main(argc, argv);
}
