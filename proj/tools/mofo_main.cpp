#include <cstdio>

int main() {
  std::puts("mofo: cli not wired yet");
  return 1;
}
