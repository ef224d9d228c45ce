#include "kppbbm/stats.hpp"

#include "kppbbm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

namespace kppbbm {

double Moments::std_error() const
{
    if (count < 2)
        return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - count * m * m) / (count - 1));
    return std::sqrt(var / count);
}

MCEstimate estimate(const std::vector<double>& v, std::uint64_t seed)
{
    if (v.empty())
        throw UsageError("estimate: no replicas");
    MCEstimate e;
    e.replicas = v.size();
    e.seed = seed;
    double s = 0.0;
    for (double x : v)
        s += x;
    e.mean = s / v.size();
    if (v.size() > 1) {
        double q = 0.0;
        for (double x : v)
            q += (x - e.mean) * (x - e.mean);
        e.std_error = std::sqrt(q / (v.size() - 1) / v.size());
    }
    return e;
}

unsigned resolve_threads(int requested)
{
    if (requested > 0)
        return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("KPPBBM_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || n <= 0)
            throw UsageError(std::string("KPPBBM_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace kppbbm
