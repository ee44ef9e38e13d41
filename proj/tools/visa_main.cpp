#include "commands.hpp"

int main(int argc, char** argv) { return visa::cli::run(argc, argv); }
