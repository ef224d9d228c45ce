#include "kppbbm/cli.hpp"

int main(int argc, char** argv)
{
    return kppbbm::run_cli(argc, argv);
}
