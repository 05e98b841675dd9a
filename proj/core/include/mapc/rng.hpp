#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mapc {

// Deterministic substream RNG. Every random draw in the simulator flows
// through a stream derived from (master seed, path of tags), so each
// (module, round) pair samples independently of execution order and the
// whole run is a pure function of the master seed.
//
// mt19937_64 is fully specified by the standard; the distribution samplers
// are implemented here (Box-Muller, Marsaglia-Tsang) because std::
// distribution objects are not bit-reproducible across library vendors.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path);

    // FNV-1a 64-bit over the label bytes; used to derive stable stream tags.
    static std::uint64_t tag(std::string_view label);

    std::uint64_t next_u64();
    double uniform01();                             // [0, 1)
    double uniform(double lo, double hi);           // [lo, hi)
    std::uint64_t uniform_below(std::uint64_t bound);  // [0, bound), unbiased
    int uniform_int(int lo, int hi);                // [lo, hi] inclusive
    double normal(double mean = 0.0, double stddev = 1.0);
    double gamma(double shape, double scale);       // shape > 0, scale > 0
    double nakagami_power(double m);                // Gamma(m, 1/m): unit mean, variance 1/m

private:
    std::mt19937_64 engine_;
};

}  // namespace mapc
