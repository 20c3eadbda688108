#include "tracescope/cli.hpp"

int main(int argc, char** argv) { return tracescope::cli::run(argc, argv); }
