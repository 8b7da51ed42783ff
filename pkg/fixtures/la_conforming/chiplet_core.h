// chiplet_core.h - memoryless limiting-amplifier model (fixture)
#pragma once

struct LimitingAmp {
    double gain;
    double v_out_max;
    double v_out_min;
    double quiescent;
    bool enabled;

    // Disabled stage holds the quiescent level; enabled stage amplifies
    // linearly and clamps to the output swing limits.
    double transfer(double v_in) const {
        if (!enabled) return quiescent;
        const double v = gain * v_in;
        if (v > v_out_max) return v_out_max;
        if (v < v_out_min) return v_out_min;
        return v;
    }
};
