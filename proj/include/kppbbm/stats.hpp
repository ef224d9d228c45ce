#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace kppbbm {

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
};

// (sum, sum of squares, count) record; merging is exact up to addition order,
// so callers reduce in replica order.
struct Moments {
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t count = 0;

    void add(double v)
    {
        sum += v;
        sumsq += v * v;
        ++count;
    }
    void merge(const Moments& o)
    {
        sum += o.sum;
        sumsq += o.sumsq;
        count += o.count;
    }
    double mean() const { return count ? sum / count : 0.0; }
    // standard error of the mean with the unbiased variance
    double std_error() const;
};

MCEstimate estimate(const std::vector<double>& per_replica, std::uint64_t seed);

// Workers: requested > 0, else KPPBBM_THREADS, else hardware concurrency.
unsigned resolve_threads(int requested);

} // namespace kppbbm
