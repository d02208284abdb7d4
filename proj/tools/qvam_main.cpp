#include "qvam/cli.hpp"

int main(int argc, char** argv) {
    return qvam::cli::run(argc, argv);
}
