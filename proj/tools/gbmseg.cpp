#include "gbm/cli.hpp"

int main(int argc, char** argv) { return gbm::cli_main(argc, argv); }
