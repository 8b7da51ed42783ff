// chiplet_core.h - amplifier model whose processing loop never yields
#pragma once

struct LimitingAmp {
    double gain;

    double transfer(double v_in) const { return gain * v_in; }
};
