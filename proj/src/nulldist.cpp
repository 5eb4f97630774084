#include "constancy/nulldist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace constancy {

// ---------------------------------------------------------------------------
// FunctionalSpec
// ---------------------------------------------------------------------------

FunctionalSpec FunctionalSpec::max_abs_bridge() {
    return FunctionalSpec{Kind::max_abs_bridge, 1, 0.05, "", {}};
}

FunctionalSpec FunctionalSpec::max_sq_norm(int p) {
    return FunctionalSpec{Kind::max_sq_norm, p, 0.05, "", {}};
}

FunctionalSpec FunctionalSpec::sum_max_abs(int p) {
    return FunctionalSpec{Kind::sum_max_abs, p, 0.05, "", {}};
}

FunctionalSpec FunctionalSpec::max_abs_sd_weighted(double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw_usage("sd-weighted functional requires eps in (0, 1/2)");
    return FunctionalSpec{Kind::max_abs_sd_weighted, 1, eps, "", {}};
}

FunctionalSpec FunctionalSpec::cvm(int p) { return FunctionalSpec{Kind::cvm, p, 0.05, "", {}}; }

FunctionalSpec FunctionalSpec::max_abs_weighted_trend() {
    return FunctionalSpec{Kind::max_abs_weighted, 1, 0.05, "trend", {}};
}

FunctionalSpec FunctionalSpec::max_abs_weighted_jump(double a) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "jump(%g)", a);
    return FunctionalSpec{Kind::max_abs_weighted, 1, 0.05, buf, {}};
}

FunctionalSpec FunctionalSpec::max_abs_weighted_custom(std::vector<double> weight_on_grid) {
    FunctionalSpec spec{Kind::max_abs_weighted, 1, 0.05, "custom", std::move(weight_on_grid)};
    return spec;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

std::string FunctionalSpec::id() const {
    char buf[96];
    switch (kind) {
        case Kind::max_abs_bridge:
            return "max-abs-bridge";
        case Kind::max_sq_norm:
            std::snprintf(buf, sizeof(buf), "max-sq-norm(p=%d)", dim);
            return buf;
        case Kind::sum_max_abs:
            if (dim == 1) return "max-abs-bridge";
            std::snprintf(buf, sizeof(buf), "sum-max-abs(p=%d)", dim);
            return buf;
        case Kind::max_abs_sd_weighted:
            std::snprintf(buf, sizeof(buf), "max-abs-sd-weighted(eps=%g)", epsilon);
            return buf;
        case Kind::cvm:
            std::snprintf(buf, sizeof(buf), "cvm(p=%d)", dim);
            return buf;
        case Kind::max_abs_weighted: {
            std::string tag = weight_tag;
            if (tag == "custom") {
                std::string blob;
                char cell[32];
                for (double v : custom_weight) {
                    std::snprintf(cell, sizeof(cell), "%.17g;", v);
                    blob += cell;
                }
                tag = "custom-" + hex64(fnv1a64(blob));
            }
            return "max-abs-weighted(" + tag + ")";
        }
    }
    throw_usage("unknown functional");
}

std::vector<double> FunctionalSpec::weight_on(int grid_size) const {
    std::vector<double> k(grid_size);
    if (weight_tag == "trend") {
        for (int i = 1; i <= grid_size; ++i) k[i - 1] = static_cast<double>(i) / grid_size - 0.5;
    } else if (weight_tag.rfind("jump(", 0) == 0) {
        const double a = std::stod(weight_tag.substr(5));
        for (int i = 1; i <= grid_size; ++i) {
            const double s = static_cast<double>(i) / grid_size;
            k[i - 1] = (s >= a ? 1.0 : 0.0) - (1.0 - a);
        }
    } else if (weight_tag == "custom") {
        // right-continuous step lookup from the user's grid
        const int m = static_cast<int>(custom_weight.size());
        if (m < 1) throw_usage("custom weight table is empty");
        for (int i = 1; i <= grid_size; ++i) {
            const double s = static_cast<double>(i) / grid_size;
            int idx = static_cast<int>(std::ceil(s * m - 1e-9));
            idx = std::min(std::max(idx, 1), m);
            k[i - 1] = custom_weight[idx - 1];
        }
    } else if (weight_tag.empty()) {
        std::fill(k.begin(), k.end(), 1.0);
    } else {
        throw_usage("unknown weight tag '" + weight_tag + "'");
    }
    return k;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

double evaluate_replication(const FunctionalSpec& spec, int grid, RngStream& rng,
                            const std::vector<double>& weight) {
    const int p = spec.dim;
    const double step_sd = 1.0 / std::sqrt(static_cast<double>(grid));

    // One bridge at a time; the functional reductions below only ever need
    // per-component passes or a running sum of squares across components.
    std::vector<double> walk(grid);
    std::vector<double> sq_accum;
    if (spec.kind == FunctionalSpec::Kind::max_sq_norm || spec.kind == FunctionalSpec::Kind::cvm)
        sq_accum.assign(grid, 0.0);

    double sum_max_abs = 0.0;
    for (int j = 0; j < p; ++j) {
        double cum = 0.0;
        for (int i = 0; i < grid; ++i) {
            cum += step_sd * rng.next_normal();
            walk[i] = cum;
        }
        const double endpoint = walk[grid - 1];
        double comp_max_abs = 0.0;
        double weighted_cum = 0.0;
        double weighted_max = 0.0;
        double sd_max = 0.0;
        for (int i = 0; i < grid; ++i) {
            const double t = static_cast<double>(i + 1) / grid;
            const double bridge = walk[i] - t * endpoint;
            comp_max_abs = std::max(comp_max_abs, std::fabs(bridge));
            if (!sq_accum.empty()) sq_accum[i] += bridge * bridge;
            if (spec.kind == FunctionalSpec::Kind::max_abs_weighted) {
                const double prev = i == 0 ? 0.0 : walk[i - 1] - (t - 1.0 / grid) * endpoint;
                weighted_cum += weight[i] * (bridge - prev);
                weighted_max = std::max(weighted_max, std::fabs(weighted_cum));
            }
            if (spec.kind == FunctionalSpec::Kind::max_abs_sd_weighted && t <= 1.0 - spec.epsilon &&
                t >= spec.epsilon && t < 1.0) {
                sd_max = std::max(sd_max, std::fabs(bridge) / std::sqrt(t * (1.0 - t)));
            }
        }
        switch (spec.kind) {
            case FunctionalSpec::Kind::max_abs_bridge:
                return comp_max_abs;
            case FunctionalSpec::Kind::sum_max_abs:
                sum_max_abs += comp_max_abs;
                break;
            case FunctionalSpec::Kind::max_abs_sd_weighted:
                return sd_max;
            case FunctionalSpec::Kind::max_abs_weighted:
                return weighted_max;
            default:
                break;
        }
    }
    if (spec.kind == FunctionalSpec::Kind::sum_max_abs) return sum_max_abs;
    if (spec.kind == FunctionalSpec::Kind::max_sq_norm) {
        double m = 0.0;
        for (double v : sq_accum) m = std::max(m, v);
        return m;
    }
    if (spec.kind == FunctionalSpec::Kind::cvm) {
        double s = 0.0;
        for (double v : sq_accum) s += v;
        return s / grid;
    }
    throw_usage("unknown functional");
}

} // namespace

NullTable simulate_bridge_functional(const FunctionalSpec& spec, int grid_size, long replications,
                                     std::uint64_t seed, int threads) {
    if (grid_size < 100) throw_usage("null table grid size must be at least 100");
    if (replications < 1000) throw_usage("null table needs at least 1000 replications");
    if (spec.dim < 1) throw_usage("functional dimension must be at least 1");

    std::vector<double> weight;
    if (spec.kind == FunctionalSpec::Kind::max_abs_weighted) weight = spec.weight_on(grid_size);

    NullTable table;
    table.functional_id = spec.id();
    table.dim = spec.dim;
    table.grid_size = grid_size;
    table.replications = replications;
    table.seed = seed;
    table.sorted_sample.assign(replications, 0.0);

    parallel_for(
        replications,
        [&](long r) {
            RngStream rng(seed, static_cast<std::uint64_t>(r));
            table.sorted_sample[r] = evaluate_replication(spec, grid_size, rng, weight);
        },
        threads);
    std::sort(table.sorted_sample.begin(), table.sorted_sample.end());
    return table;
}

// ---------------------------------------------------------------------------
// NullTable
// ---------------------------------------------------------------------------

double NullTable::quantile(double prob) const {
    if (sorted_sample.empty()) throw_internal("empty null table");
    if (!(prob >= 0.0 && prob <= 1.0)) throw_usage("quantile probability outside [0,1]");
    const double h = (static_cast<double>(sorted_sample.size()) - 1.0) * prob;
    const size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= sorted_sample.size()) return sorted_sample.back();
    const double frac = h - static_cast<double>(lo);
    return sorted_sample[lo] + frac * (sorted_sample[lo + 1] - sorted_sample[lo]);
}

double NullTable::p_value(double observed) const {
    if (sorted_sample.empty()) throw_internal("empty null table");
    const auto it = std::lower_bound(sorted_sample.begin(), sorted_sample.end(), observed);
    const long exceed = static_cast<long>(sorted_sample.end() - it);
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(replications) + 1.0);
}

double lookup_p_value(const NullTable& table, double observed) { return table.p_value(observed); }

std::string NullTable::cache_key() const {
    std::ostringstream key;
    key << functional_id << "|dim=" << dim << "|grid=" << grid_size << "|reps=" << replications
        << "|seed=" << seed;
    return key.str();
}

void NullTable::write(std::ostream& out) const {
    out << "constancy-nulltable-v1\n";
    out << "functional " << functional_id << "\n";
    out << "dim " << dim << "\n";
    out << "grid " << grid_size << "\n";
    out << "reps " << replications << "\n";
    out << "seed " << seed << "\n";
    char buf[40];
    out << "quantiles";
    for (double q : {0.5, 0.9, 0.95, 0.99}) {
        std::snprintf(buf, sizeof(buf), " %g:%.17g", q, quantile(q));
        out << buf;
    }
    out << "\nsample\n";
    for (double v : sorted_sample) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out << buf;
    }
}

bool NullTable::read(std::istream& in, NullTable& out) {
    std::string line;
    if (!std::getline(in, line) || line != "constancy-nulltable-v1") return false;
    NullTable t;
    std::string tag;
    if (!(in >> tag >> t.functional_id) || tag != "functional") return false;
    if (!(in >> tag >> t.dim) || tag != "dim") return false;
    if (!(in >> tag >> t.grid_size) || tag != "grid") return false;
    if (!(in >> tag >> t.replications) || tag != "reps") return false;
    if (!(in >> tag >> t.seed) || tag != "seed") return false;
    if (!(in >> tag) || tag != "quantiles") return false;
    std::getline(in, line); // quantile summary; recomputed from the sample
    if (!std::getline(in, line) || line != "sample") return false;
    t.sorted_sample.reserve(static_cast<size_t>(t.replications));
    double v;
    while (in >> v) t.sorted_sample.push_back(v);
    if (static_cast<long>(t.sorted_sample.size()) != t.replications) return false;
    if (!std::is_sorted(t.sorted_sample.begin(), t.sorted_sample.end())) return false;
    out = std::move(t);
    return true;
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

NullTable NullTableCache::get_or_build(const FunctionalSpec& spec, int grid_size,
                                       long replications, std::uint64_t seed, int threads) const {
    if (!enabled_) return simulate_bridge_functional(spec, grid_size, replications, seed, threads);

    NullTable probe;
    probe.functional_id = spec.id();
    probe.dim = spec.dim;
    probe.grid_size = grid_size;
    probe.replications = replications;
    probe.seed = seed;
    const std::string key = probe.cache_key();
    const std::filesystem::path file =
        std::filesystem::path(dir_) / (hex64(fnv1a64(key)) + ".nulltable");

    if (std::filesystem::exists(file)) {
        std::ifstream in(file);
        NullTable cached;
        if (in && NullTable::read(in, cached) && cached.cache_key() == key) return cached;
        // corrupt or mismatched entry: drop it and recompute
        std::error_code ec;
        std::filesystem::remove(file, ec);
    }

    NullTable fresh = simulate_bridge_functional(spec, grid_size, replications, seed, threads);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::ofstream out(file, std::ios::trunc);
    if (out) fresh.write(out);
    return fresh;
}

} // namespace constancy
