#include <cstdio>
int main(int argc, char** argv){ (void)argc; (void)argv; std::puts("acceptance stub"); return 1; }
