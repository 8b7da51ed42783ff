// main.cpp - hangs before producing results.csv or report.txt, so the
// run must be killed by the simulation timeout.
#include "chiplet_core.h"

int sc_main(int, char**) {
    LimitingAmp amp{10.0};
    volatile double sink = 0.0;
    for (;;) {
        sink = amp.transfer(sink + 1e-9);
    }
    return 0;
}

int main(int argc, char** argv) { return sc_main(argc, argv); }
