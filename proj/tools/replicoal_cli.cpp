#include "app/commands.hpp"

int main(int argc, char** argv) { return replicoal::app::main(argc, argv); }
