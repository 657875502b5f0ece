#include "commands.hpp"

int main(int argc, char** argv) { return gil::cli::run(argc, argv); }
