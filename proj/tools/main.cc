#include "reassert/cli.h"

int main(int argc, char** argv) { return reassert::cli::run(argc, argv); }
