class C { protected: int x = 0; };
int main() { C c; return c.x; }
