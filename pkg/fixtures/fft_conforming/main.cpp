// main.cpp - black-box round-trip testbench for the transform core
#include "chiplet_core.h"

#include <algorithm>
#include <cstdio>

// sc_main is the testbench entry point; main() below is a compatibility
// shim so the fixture runs without a SystemC installation.
int sc_main(int, char**) {
    std::vector<TransformCore::cd> input;
    for (int i = 1; i <= 8; ++i) input.push_back({static_cast<double>(i), 0.0});

    auto spectrum = TransformCore::transform(input, false);
    auto back = TransformCore::transform(spectrum, true);

    std::FILE* csv = std::fopen("results.csv", "w");
    std::fprintf(csv, "time_ns,idx,in_re,in_im,out_re,out_im\n");
    double max_err = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        std::fprintf(csv, "%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", i, i,
                     input[i].real(), input[i].imag(), back[i].real(), back[i].imag());
        max_err = std::max({max_err, std::abs(back[i].real() - input[i].real()),
                            std::abs(back[i].imag() - input[i].imag())});
    }
    std::fclose(csv);

    const bool pass = max_err <= 1e-12;
    std::FILE* rep = std::fopen("report.txt", "w");
    std::fprintf(rep, "VERIFICATION RESULT: %s\n", pass ? "PASS" : "FAIL");
    std::fprintf(rep, "CHECK fft_ifft_roundtrip: %s - max_error=%.3g\n",
                 pass ? "PASS" : "FAIL", max_err);
    std::fclose(rep);
    return 0;
}

int main(int argc, char** argv) { return sc_main(argc, argv); }
