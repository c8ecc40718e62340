using namespace Missing;
int main() { return 0; }
