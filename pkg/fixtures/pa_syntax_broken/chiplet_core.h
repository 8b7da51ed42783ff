// chiplet_core.h - power-amplifier compression model (fixture)
#pragma once
#include <cmath>

struct RappAmplifier {
    double g_db;
    double psat_dbm;
    double s;

    // Power-linear soft-compression curve evaluated in the log domain:
    // pout = pin + g - (10/s) * log10(1 + 10^(s*(pin + g - psat)/10)).
    double pout_dbm(double pin_dbm) const {
        const double excess = pin_dbm + g_db - psat_dbm;
        const double u = s * excess / 10.0;
        double log_term;
        if (u > 0.0)
            log_term = u + std::log10(1.0 + std::pow(10.0, -u));
        else
            log_term = std::log10(1.0 + std::pow(10.0, u));
        return pin_dbm + g_db - (10.0 / s) * log_term;
    }
};
