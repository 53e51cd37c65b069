#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ufs {

/// Runs fn(i) for i in [0, count) on `jobs` threads. Indices are assigned in
/// contiguous chunks. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    const std::size_t chunk = (count + jobs - 1) / jobs;
    for (unsigned w = 0; w < jobs; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Mean and standard error of a sample, summed in index order.
struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
};

template <class Range>
MeanStderr mean_stderr(const Range& values) {
    CompensatedSum s;
    std::size_t n = 0;
    for (double v : values) {
        s.add(v);
        ++n;
    }
    MeanStderr out;
    if (n == 0) return out;
    out.mean = s.value() / static_cast<double>(n);
    if (n < 2) return out;
    CompensatedSum ss;
    for (double v : values) ss.add((v - out.mean) * (v - out.mean));
    out.se = std::sqrt(ss.value() / static_cast<double>(n - 1) / static_cast<double>(n));
    return out;
}

}  // namespace ufs
