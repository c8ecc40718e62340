#include <vector>
int main() { std::vector<int, int, int, int> w; return 0; }
