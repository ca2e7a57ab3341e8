#include "probekit/cli.hpp"

int main(int argc, char** argv) { return probekit::cli_run(argc, argv); }
