#include "adaptlqr/cli.hpp"

int main(int argc, char** argv) { return adaptlqr::run_cli(argc, argv); }
