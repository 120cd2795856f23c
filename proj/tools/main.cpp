#include <vector>

#include "minexp/cli.hpp"

int main(int argc, char** argv) {
    return minexp::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
