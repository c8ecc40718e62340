#include <string>
int main() { string s; return 0; }
