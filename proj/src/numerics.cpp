#include "passive/numerics.hpp"

#include <algorithm>
#include <stdexcept>

namespace passive::numerics {

double simpson(std::span<const double> v, double h)
{
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (v[0] + v[1]);
    if (n == 3) return h / 3.0 * (v[0] + 4.0 * v[1] + v[2]);

    auto simpson_odd = [&](std::size_t count) {
        double odd = 0.0, even = 0.0;
        for (std::size_t i = 1; i + 1 < count; i += 2) odd += v[i];
        for (std::size_t i = 2; i + 1 < count; i += 2) even += v[i];
        return h / 3.0 * (v[0] + v[count - 1] + 4.0 * odd + 2.0 * even);
    };

    if (n % 2 == 1) return simpson_odd(n);
    // even count: Simpson over the first n-3 points, 3/8 rule on the tail
    const double tail = 3.0 * h / 8.0 * (v[n - 4] + 3.0 * v[n - 3] + 3.0 * v[n - 2] + v[n - 1]);
    return simpson_odd(n - 3) + tail;
}

std::vector<double> cumulative_integral(std::span<const double> v, double h)
{
    const std::size_t n = v.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    if (n < 4) {
        for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
        return out;
    }
    const double c = h / 24.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double panel;
        if (i == 0)
            panel = c * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]);
        else if (i + 2 == n)
            panel = c * (9.0 * v[n - 1] + 19.0 * v[n - 2] - 5.0 * v[n - 3] + v[n - 4]);
        else
            panel = c * (-v[i - 1] + 13.0 * v[i] + 13.0 * v[i + 1] - v[i + 2]);
        out[i + 1] = out[i] + panel;
    }
    return out;
}

double gregory(std::span<const double> v, double h)
{
    const std::size_t n = v.size();
    if (n < 8) return simpson(v, h);
    // weights 3/8, 7/6, 23/24, 1, ..., 1, 23/24, 7/6, 3/8
    double sum = 0.0;
    for (std::size_t i = 3; i + 3 < n; ++i) sum += v[i];
    sum += 3.0 / 8.0 * (v[0] + v[n - 1]);
    sum += 7.0 / 6.0 * (v[1] + v[n - 2]);
    sum += 23.0 / 24.0 * (v[2] + v[n - 3]);
    return h * sum;
}

std::vector<double> fd_weights(std::span<const double> x, double x0, int order)
{
    const std::size_t n = x.size();
    const int m = order;
    // c[j][k]: weight of point j for derivative k
    std::vector<std::vector<double>> c(n, std::vector<double>(std::size_t(m) + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(int(i), m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = c[j][std::size_t(m)];
    return w;
}

std::vector<double> differentiate(std::span<const double> v, double h, int order)
{
    const std::size_t n = v.size();
    constexpr std::size_t width = 7;
    if (n < width + 1) throw std::invalid_argument("differentiate: need at least 8 samples");
    if (order != 1 && order != 2) throw std::invalid_argument("differentiate: order must be 1 or 2");

    // weights depend only on the node's offset inside its window
    std::vector<std::vector<double>> table(width);
    std::vector<double> pts(width);
    for (std::size_t j = 0; j < width; ++j) pts[j] = double(j);
    for (std::size_t off = 0; off < width; ++off) table[off] = fd_weights(pts, double(off), order);

    const double scale = order == 1 ? 1.0 / h : 1.0 / (h * h);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(i) - 3, 0, std::ptrdiff_t(n - width));
        const auto& w = table[i - start];
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc += w[j] * v[start + j];
        out[i] = acc * scale;
    }
    return out;
}

std::vector<double> linspace(double a, double b, std::size_t count)
{
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = a;
        return out;
    }
    const double h = (b - a) / double(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = a + h * double(i);
    out.back() = b;
    return out;
}

}  // namespace passive::numerics
