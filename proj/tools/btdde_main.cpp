#include <cstdio>

int main() {
  std::puts("btdde: command-line interface not wired up yet");
  return 3;
}
