#include "loracap/sweep.hpp"

int main(int argc, char** argv) { return loracap::cli_main(argc, argv); }
