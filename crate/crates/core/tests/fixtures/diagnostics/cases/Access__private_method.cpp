class C { void f() {} };
int main() { C c; c.f(); return 0; }
