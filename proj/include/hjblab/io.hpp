#pragma once

#include <string>
#include <vector>

#include "hjblab/extended_real.hpp"

namespace hjblab {

// Round-trip-exact, locale-independent decimal form (%.17g trimmed).
// All CSV and JSON emission goes through this so identical inputs produce
// byte-identical output files.
std::string fmt_double(double v);

std::string fmt_extended(const ExtendedReal& v);

// Strictly increasing grids, endpoints included.
std::vector<double> linear_grid(double lo, double hi, int n);
std::vector<double> log_grid(double lo, double hi, int n);

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    bool log_spaced = false;
    std::vector<double> build() const;
};

// Parses "MIN:MAX:N" or "MIN:MAX:N:log". Throws ParseError.
GridSpec parse_grid_spec(const std::string& text);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace hjblab
