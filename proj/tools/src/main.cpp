#include <cstdio>

int main() {
  std::puts("ddopt: command-line interface under construction");
  return 2;
}
