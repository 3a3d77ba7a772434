#include "sense4fl/cli.hpp"

int main(int argc, char** argv) { return sense4fl::cli::run(argc, argv); }
