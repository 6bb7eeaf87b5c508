#include "mosumseg/cli.hpp"

int main(int argc, char** argv) {
    return mosumseg::run_cli(argc, argv);
}
