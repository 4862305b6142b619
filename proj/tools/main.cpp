#include <cstdio>
int main() { std::puts("bosemix (under construction)"); return 0; }
