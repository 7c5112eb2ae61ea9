#include <cstdio>

int main() {
  std::puts("gnet: command-line interface under construction");
  return 0;
}
