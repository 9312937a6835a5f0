// placeholder until the scene configs exist
#include <cstdio>
int main() {
  std::puts("acceptance: pending");
  return 0;
}
