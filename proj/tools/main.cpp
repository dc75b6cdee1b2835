#include <cstdio>
int main(){ std::puts("swift4d stub"); return 0; }
