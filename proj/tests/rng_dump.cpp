// Prints a deterministic sample of the random stream for a (seed, stream_id)
// pair; the reproducibility test runs it twice and compares bytes.

#include <cstdio>
#include <cstdlib>

#include "constancy/numerics.hpp"

int main(int argc, char** argv) {
    if (argc != 4) {
        std::fprintf(stderr, "usage: rng_dump <seed> <stream_id> <count>\n");
        return 1;
    }
    const auto seed = static_cast<std::uint64_t>(std::strtoull(argv[1], nullptr, 10));
    const auto stream = static_cast<std::uint64_t>(std::strtoull(argv[2], nullptr, 10));
    const long count = std::strtol(argv[3], nullptr, 10);

    constancy::RngStream rng(seed, stream);
    for (long i = 0; i < count; ++i) {
        std::printf("%llu\n", static_cast<unsigned long long>(rng.next_u64()));
    }
    constancy::RngStream rng2(seed, stream);
    for (long i = 0; i < count; ++i) {
        std::printf("%.17g %.17g\n", rng2.next_uniform(), rng2.next_normal());
    }
    return 0;
}
