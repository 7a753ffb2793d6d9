#include "ghn/cli.hpp"

int main(int argc, char** argv) {
    return ghn::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
