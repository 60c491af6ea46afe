#include <cstdio>

int main() {
  std::printf("fedgan: cli not wired up yet\n");
  return 1;
}
