#include "rotorkick/cli.hpp"

int main(int argc, char** argv) { return rotorkick::cli_main(argc, argv); }
