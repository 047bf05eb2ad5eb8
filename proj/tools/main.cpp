#include "pcdream/cli.hpp"

int main(int argc, char** argv) {
    return pcdream::cli::run(argc, argv);
}
