// chiplet_core.h - behavioral 8-point transform core (fixture model)
#pragma once
#include <complex>
#include <cstddef>
#include <cmath>
#include <vector>

class TransformCore {
public:
    using cd = std::complex<double>;

    // Direct O(N^2) transform in double precision; inverse flips the
    // exponent sign and applies the 1/N scaling.
    static std::vector<cd> transform(const std::vector<cd>& in, bool inverse) {
        static const double kPi = 3.14159265358979323846;
        const std::size_t n = in.size();
        std::vector<cd> out(n);
        const double sign = inverse ? 1.0 : -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            cd acc(0.0, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double angle = sign * 2.0 * kPi *
                                     static_cast<double>(i * k) / static_cast<double>(n);
                acc += in[i] * cd(std::cos(angle), std::sin(angle));
            }
            out[k] = inverse ? acc / static_cast<double>(n) : acc;
        }
        return out;
    }
};
