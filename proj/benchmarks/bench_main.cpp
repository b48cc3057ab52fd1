#include <benchmark/benchmark.h>

// The distro benchmark_main archive carries LTO bytecode from another GCC
// release, so main is provided here.
BENCHMARK_MAIN();
