// main.cpp - power sweep testbench with a deliberate syntax defect
// (missing semicolon) so compilation fails with a line-numbered error.
#include "chiplet_core.h"

#include <cstdio>

int sc_main(int, char**) {
    const RappAmplifier amp{20.0, 43.0, 2.0}
    std::FILE* csv = std::fopen("results.csv", "w");
    std::fprintf(csv, "time_ns,pin_dbm,pout_dbm\n");
    for (int t = 0; t <= 130; ++t) {
        const double pin = -30.0 + 0.5 * t;
        std::fprintf(csv, "%d,%.9g,%.17g\n", t, pin, amp.pout_dbm(pin));
    }
    std::fclose(csv);
    std::FILE* rep = std::fopen("report.txt", "w");
    std::fprintf(rep, "VERIFICATION RESULT: PASS\n");
    std::fclose(rep);
    return 0;
}

int main(int argc, char** argv) { return sc_main(argc, argv); }
