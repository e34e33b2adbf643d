#include <busdrive/cli.hpp>

int main(int argc, char** argv) { return busdrive::cli::run(argc, argv); }
