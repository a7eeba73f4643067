#include "hjblab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hjblab/errors.hpp"

namespace hjblab {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Try shorter forms that still round-trip; keeps files readable.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(shorter, "%lf", &back);
        if (back == v) return shorter;
    }
    return buf;
}

std::string fmt_extended(const ExtendedReal& v) {
    if (v.is_plus_inf()) return "+inf";
    if (v.is_minus_inf()) return "-inf";
    return fmt_double(v.value());
}

std::string ExtendedReal::to_string() const { return fmt_extended(*this); }

std::vector<double> linear_grid(double lo, double hi, int n) {
    if (n < 2 || !(lo < hi)) throw DomainError("linear_grid: need n >= 2 and lo < hi");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0)) throw DomainError("log_grid: lo must be positive");
    if (n < 2 || !(lo < hi)) throw DomainError("log_grid: need n >= 2 and lo < hi");
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> GridSpec::build() const {
    return log_spaced ? log_grid(lo, hi, n) : linear_grid(lo, hi, n);
}

GridSpec parse_grid_spec(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 3 || parts.size() > 4)
        throw ParseError("grid spec must be MIN:MAX:N[:log]", text);
    GridSpec spec;
    try {
        spec.lo = std::stod(parts[0]);
        spec.hi = std::stod(parts[1]);
        spec.n = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw ParseError("grid spec has non-numeric fields", text);
    }
    if (parts.size() == 4) {
        if (parts[3] != "log") throw ParseError("grid spec suffix must be 'log'", text);
        spec.log_spaced = true;
    }
    if (spec.n < 2 || !(spec.lo < spec.hi) || (spec.log_spaced && spec.lo <= 0))
        throw ParseError("grid spec out of range", text);
    return spec;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f.good()) throw Error("cannot open for writing: " + path);
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f.good()) throw Error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good()) throw Error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace hjblab
