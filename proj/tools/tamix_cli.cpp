// Command-line entry point. Subcommands land here as the engine modules come
// together; see README for usage.
#include <cstdio>

int main() {
    std::puts("tamix: not wired up yet");
    return 2;
}
