#include "oukl/cli.hpp"

int main(int argc, char** argv) { return oukl::cli_main(argc, argv); }
