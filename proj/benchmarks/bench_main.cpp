#include <benchmark/benchmark.h>

// The distro's libbenchmark_main.a ships LTO bytecode from an older compiler,
// so the entry point lives here instead.
BENCHMARK_MAIN();
