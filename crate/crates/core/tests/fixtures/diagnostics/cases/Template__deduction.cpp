#include <vector>
int main() { std::vector v; return 0; }
