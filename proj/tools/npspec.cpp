#include "npspec/app.hpp"

int main(int argc, char** argv) { return npspec::main_entry(argc, argv); }
