// Placeholder main while the library is under construction; replaced by the
// full CLI once the runner exists.
int main() { return 0; }
