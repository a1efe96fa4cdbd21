#include "cli_app.hpp"

int main(int argc, char** argv) { return comfortctl::run(argc, argv); }
