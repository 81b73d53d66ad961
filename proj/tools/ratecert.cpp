#include "ratecert/cli.hpp"

int main(int argc, char** argv) { return ratecert::run_cli(argc, argv); }
