#include "dicot/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "dicot/errors.hpp"
#include "dicot/rng.hpp"

namespace dicot {

namespace {

// scores[a*n + b] = <z_a, z_b> / tau over the flattened (BT) anchor axis,
// then mean cross entropy with preceding-timestep positives.
template <typename Real>
double timestep_kernel(const std::vector<Real>& z, int64_t B, int64_t T, int64_t F, double tau,
                       std::vector<Real>& scores) {
    const int64_t n = B * T;
    for (int64_t a = 0; a < n; ++a) {
        const Real* za = &z[static_cast<size_t>(a * F)];
        Real* row = &scores[static_cast<size_t>(a * n)];
        for (int64_t b = 0; b < n; ++b) {
            const Real* zb = &z[static_cast<size_t>(b * F)];
            Real acc = 0;
            for (int64_t f = 0; f < F; ++f) acc += za[f] * zb[f];
            row[b] = acc / static_cast<Real>(tau);
        }
    }
    double total = 0.0;
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t t = 0; t < T; ++t) {
            const int64_t a = i * T + t;
            const int64_t target = (t > 0) ? a - 1 : a;
            const Real* row = &scores[static_cast<size_t>(a * n)];
            Real m = row[0];
            for (int64_t b = 1; b < n; ++b) m = std::max(m, row[b]);
            double sum = 0.0;
            for (int64_t b = 0; b < n; ++b) sum += std::exp(static_cast<double>(row[b] - m));
            total += static_cast<double>(m) + std::log(sum) - static_cast<double>(row[target]);
        }
    }
    return total / static_cast<double>(n);
}

template <typename Real>
double dicot_kernel(const std::vector<Real>& z, int64_t B, int64_t k, int64_t F, double tau,
                    std::vector<Real>& scores) {
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t j = 0; j < k; ++j) {
            const Real* zj = &z[static_cast<size_t>((i * k + j) * F)];
            Real* row = &scores[static_cast<size_t>((i * k + j) * k)];
            for (int64_t p = 0; p < k; ++p) {
                const Real* zp = &z[static_cast<size_t>((i * k + p) * F)];
                Real acc = 0;
                for (int64_t f = 0; f < F; ++f) acc += zj[f] * zp[f];
                row[p] = acc / static_cast<Real>(tau);
            }
        }
    }
    double total = 0.0;
    for (int64_t i = 0; i < B; ++i) {
        for (int64_t j = 0; j < k; ++j) {
            const int64_t target = (j > 0) ? j - 1 : 0;
            const Real* row = &scores[static_cast<size_t>((i * k + j) * k)];
            Real m = row[0];
            for (int64_t p = 1; p < k; ++p) m = std::max(m, row[p]);
            double sum = 0.0;
            for (int64_t p = 0; p < k; ++p) sum += std::exp(static_cast<double>(row[p] - m));
            total += static_cast<double>(m) + std::log(sum) - static_cast<double>(row[target]);
        }
    }
    return total / static_cast<double>(B * k);
}

template <typename Real>
std::vector<Real> random_embeddings(int64_t count, Rng& rng) {
    std::vector<Real> z(static_cast<size_t>(count));
    for (Real& v : z) v = static_cast<Real>(uniform_real(rng, -1.0, 1.0));
    return z;
}

struct TimedCell {
    double median_seconds = 0.0;
    double checksum = 0.0;  // consumed so the kernel cannot be optimized away
};

template <typename Fn>
TimedCell time_cell(Fn&& fn, int repeats) {
    using clock = std::chrono::steady_clock;
    TimedCell cell;

    auto once = [&]() {
        const auto t0 = clock::now();
        cell.checksum += fn();
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    const double probe = std::max(once(), 1e-9);
    const int reps = static_cast<int>(std::min(10000.0, std::max(1.0, std::ceil(0.015 / probe))));

    auto sample = [&]() {
        const auto t0 = clock::now();
        for (int r = 0; r < reps; ++r) cell.checksum += fn();
        return std::chrono::duration<double>(clock::now() - t0).count() / reps;
    };

    for (int attempt = 0; attempt < 3; ++attempt) {
        sample();  // warmup, discarded
        std::vector<double> times;
        times.reserve(static_cast<size_t>(repeats));
        for (int r = 0; r < repeats; ++r) times.push_back(sample());
        std::sort(times.begin(), times.end());
        cell.median_seconds = times[times.size() / 2];
        const double spread = (times.back() - times.front()) / cell.median_seconds;
        if (spread < 0.25) break;
    }
    return cell;
}

}  // namespace

int64_t timestep_score_elements(int64_t B, int64_t T) { return B * T * B * T; }

double timestep_contrast_loss(const Tensor& z, double tau, int64_t budget_bytes) {
    if (z.rank() != 3) throw ShapeError("timestep loss expects B x T x F, got " + shape_to_string(z.shape));
    if (tau <= 0.0) throw ConfigError("temperature must be > 0");
    const int64_t B = z.shape[0], T = z.shape[1], F = z.shape[2];
    const int64_t bytes = timestep_score_elements(B, T) * static_cast<int64_t>(sizeof(double));
    if (bytes > budget_bytes)
        throw BudgetError("score matrix needs " + std::to_string(bytes) + " bytes, budget is " +
                          std::to_string(budget_bytes));
    std::vector<double> scores(static_cast<size_t>(timestep_score_elements(B, T)));
    return timestep_kernel<double>(z.data, B, T, F, tau, scores);
}

double bench_dicot_loss(const Tensor& z, double tau) {
    if (z.rank() != 3) throw ShapeError("dicot kernel expects B x k x F, got " + shape_to_string(z.shape));
    if (tau <= 0.0) throw ConfigError("temperature must be > 0");
    const int64_t B = z.shape[0], k = z.shape[1], F = z.shape[2];
    std::vector<double> scores(static_cast<size_t>(B * k * k));
    return dicot_kernel<double>(z.data, B, k, F, tau, scores);
}

void ScalingConfig::validate() const {
    if (T_values.empty() || B_values.empty()) throw ConfigError("scaling sweep needs T and B values");
    for (int64_t t : T_values)
        if (t < 2) throw ConfigError("sweep T values must be >= 2");
    for (int64_t b : B_values)
        if (b < 1) throw ConfigError("sweep B values must be >= 1");
    if (k < 2) throw ConfigError("sweep k must be >= 2");
    if (F < 1) throw ConfigError("sweep F must be >= 1");
    if (repeats < 3) throw ConfigError("need at least 3 timing repeats");
    if (budget_bytes < 1024) throw ConfigError("budget too small to measure anything");
}

namespace {

template <typename Real>
void run_sweep(const ScalingConfig& config, ScalingResult& result) {
    Rng rng = make_rng(config.seed);
    const double tau = 0.07;
    const int64_t k = config.k, F = config.F;

    for (const char* method : {"dicot", "timestep"}) {
        const bool is_dicot = std::string(method) == "dicot";
        for (int64_t T : config.T_values) {
            for (int64_t B : config.B_values) {
                BenchPoint point;
                point.method = method;
                point.B = B;
                point.T = T;
                point.k = static_cast<int>(k);
                point.F = static_cast<int>(F);
                const int64_t in_elems = is_dicot ? B * k * F : B * T * F;
                const int64_t score_elems = is_dicot ? B * k * k : timestep_score_elements(B, T);
                point.bytes = (in_elems + score_elems) * static_cast<int64_t>(sizeof(Real));
                if (point.bytes > config.budget_bytes) {
                    point.skipped = true;
                    result.points.push_back(point);
                    continue;
                }
                std::vector<Real> z = random_embeddings<Real>(in_elems, rng);
                std::vector<Real> scores(static_cast<size_t>(score_elems));
                TimedCell cell =
                    is_dicot
                        ? time_cell([&]() { return dicot_kernel<Real>(z, B, k, F, tau, scores); },
                                    config.repeats)
                        : time_cell([&]() { return timestep_kernel<Real>(z, B, T, F, tau, scores); },
                                    config.repeats);
                if (!std::isfinite(cell.checksum))
                    throw NumericsError("benchmark kernel produced a non-finite loss");
                point.median_seconds = cell.median_seconds;
                result.points.push_back(point);
            }
        }
    }
}

double slope_of(const ScalingResult& result, const std::string& method, bool vary_T,
                int64_t fixed_value) {
    std::vector<double> xs, ys;
    for (const BenchPoint& p : result.points) {
        if (p.method != method || p.skipped) continue;
        if (vary_T && p.B == fixed_value) {
            xs.push_back(static_cast<double>(p.T));
            ys.push_back(p.median_seconds);
        } else if (!vary_T && p.T == fixed_value) {
            xs.push_back(static_cast<double>(p.B));
            ys.push_back(p.median_seconds);
        }
    }
    if (xs.size() < 2) return std::nan("");
    return loglog_slope(xs, ys);
}

}  // namespace

ScalingResult run_scaling(const ScalingConfig& config) {
    config.validate();
    ScalingResult result;
    if (config.use_f32)
        run_sweep<float>(config, result);
    else
        run_sweep<double>(config, result);
    result.dicot_slope_T = slope_of(result, "dicot", true, config.B_values.front());
    result.timestep_slope_T = slope_of(result, "timestep", true, config.B_values.front());
    result.dicot_slope_B = slope_of(result, "dicot", false, config.T_values.front());
    return result;
}

void write_bench_csv(const ScalingResult& result, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    std::fputs("method,B,T,k,F,median_seconds,bytes\n", f);
    for (const BenchPoint& p : result.points) {
        if (p.skipped)
            std::fprintf(f, "%s,%lld,%lld,%d,%d,nan,%lld\n", p.method.c_str(),
                         static_cast<long long>(p.B), static_cast<long long>(p.T), p.k, p.F,
                         static_cast<long long>(p.bytes));
        else
            std::fprintf(f, "%s,%lld,%lld,%d,%d,%.9g,%lld\n", p.method.c_str(),
                         static_cast<long long>(p.B), static_cast<long long>(p.T), p.k, p.F,
                         p.median_seconds, static_cast<long long>(p.bytes));
    }
    if (std::fclose(f) != 0) throw FormatError("write failed for '" + path + "'");
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ConfigError("slope needs at least two (x, y) points");
    const size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0 && ys[i] > 0.0)) throw NumericsError("slope inputs must be positive");
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

}  // namespace dicot
