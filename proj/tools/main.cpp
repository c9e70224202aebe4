#include "epslab/run.hpp"

int main(int argc, char** argv) { return epslab::run(argc, argv); }
