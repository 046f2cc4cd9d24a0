#include "cli.hpp"

int main(int argc, char** argv)
{
    return dff::cli::cli_dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
