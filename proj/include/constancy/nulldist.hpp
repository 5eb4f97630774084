#ifndef CONSTANCY_NULLDIST_HPP
#define CONSTANCY_NULLDIST_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "constancy/numerics.hpp"

namespace constancy {

// A limit-distribution functional of p independent Brownian bridges.
struct FunctionalSpec {
    enum class Kind {
        max_abs_bridge,       // max_t |W0(t)|, p = 1
        max_sq_norm,          // max_t sum_j W0_j(t)^2
        sum_max_abs,          // sum_j max_t |W0_j(t)|
        max_abs_sd_weighted,  // max_{eps<=t<=1-eps} |W0(t)| / sqrt(t(1-t)), p = 1
        cvm,                  // integral of squared norm
        max_abs_weighted,     // max_t |int_0^t K dW0|, p = 1
    };

    Kind kind = Kind::max_abs_bridge;
    int dim = 1;
    double epsilon = 0.05;      // max_abs_sd_weighted only
    std::string weight_tag;     // max_abs_weighted: "trend" | "jump(a)" | "custom"
    std::vector<double> custom_weight; // custom weights on an arbitrary grid

    static FunctionalSpec max_abs_bridge();
    static FunctionalSpec max_sq_norm(int p);
    static FunctionalSpec sum_max_abs(int p);
    static FunctionalSpec max_abs_sd_weighted(double eps);
    static FunctionalSpec cvm(int p);
    static FunctionalSpec max_abs_weighted_trend();
    static FunctionalSpec max_abs_weighted_jump(double a);
    static FunctionalSpec max_abs_weighted_custom(std::vector<double> weight_on_grid);

    // Canonical identifier, also the cache key component. sum_max_abs with
    // p = 1 canonicalizes to max-abs-bridge.
    std::string id() const;
    // Weight values on a simulation grid of the given size.
    std::vector<double> weight_on(int grid_size) const;
};

// Monte Carlo sample of a bridge functional, sorted ascending. Fully
// reproducible from (functional_id, grid_size, replications, seed):
// replication r always draws from stream_id r regardless of worker count.
struct NullTable {
    std::string functional_id;
    int dim = 1;
    int grid_size = 0;
    long replications = 0;
    std::uint64_t seed = 0;
    std::vector<double> sorted_sample;

    // type-7 interpolated quantile of the sample
    double quantile(double prob) const;
    // (1 + #{sample >= observed}) / (replications + 1)
    double p_value(double observed) const;

    std::string cache_key() const;
    void write(std::ostream& out) const;
    static bool read(std::istream& in, NullTable& out); // false if corrupt
};

NullTable simulate_bridge_functional(const FunctionalSpec& spec, int grid_size, long replications,
                                     std::uint64_t seed, int threads = 0);

double lookup_p_value(const NullTable& table, double observed);

// Optional disk cache; purely an optimization. Corrupt entries are
// discarded and recomputed.
class NullTableCache {
public:
    NullTableCache() = default; // disabled
    explicit NullTableCache(std::string dir) : dir_(std::move(dir)), enabled_(!dir_.empty()) {}

    bool enabled() const { return enabled_; }
    NullTable get_or_build(const FunctionalSpec& spec, int grid_size, long replications,
                           std::uint64_t seed, int threads = 0) const;

private:
    std::string dir_;
    bool enabled_ = false;
};

} // namespace constancy

#endif
