#pragma once

// Symmetry-averaged two-point tables S(x) on tori, with CSV round trip
// (columns x1..xd,S,stderr). Downstream diagram and Fourier checks consume
// this type only, so they work identically on measured and synthetic data.

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "currentlab/geometry.hpp"

namespace currentlab {

struct TwoPointTable {
    int d = 0;
    int side = 0;
    double beta = 0.0;
    std::string model_id;
    std::vector<double> s;    // indexed like Torus sites
    std::vector<double> err;  // standard errors, same indexing
    double xi = 0.0;          // exponential-fit correlation length estimate

    int n_sites() const { return static_cast<int>(s.size()); }

    Torus torus(double j = 1.0) const { return Torus(d, side, j); }

    double at(const std::array<int, 4>& c) const { return s[torus().index(c)]; }

    // on-axis value S(n e1)
    double axis(int n) const {
        return at({n, 0, 0, 0});
    }
};

inline void write_table_csv(const TwoPointTable& t, std::ostream& out) {
    out << "# beta=" << t.beta << " model=" << t.model_id << " xi=" << t.xi << "\n";
    for (int k = 0; k < t.d; ++k) out << "x" << (k + 1) << ",";
    out << "S,stderr\n";
    Torus geo = t.torus();
    for (int site = 0; site < t.n_sites(); ++site) {
        auto c = geo.coords(site);
        for (int k = 0; k < t.d; ++k) out << c[k] << ",";
        out << t.s[site] << "," << t.err[site] << "\n";
    }
}

inline void write_table_csv_file(const TwoPointTable& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_table_csv(t, f);
}

inline TwoPointTable read_table_csv(std::istream& in, int d, int side, double beta) {
    TwoPointTable t;
    t.d = d;
    t.side = side;
    t.beta = beta;
    Torus geo(d, side, 1.0);
    t.s.assign(geo.n_sites(), 0.0);
    t.err.assign(geo.n_sites(), 0.0);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        std::istringstream ls(line);
        std::array<int, 4> c{0, 0, 0, 0};
        std::string cell;
        for (int k = 0; k < d; ++k) {
            if (!std::getline(ls, cell, ',')) throw std::runtime_error("short table row");
            c[k] = std::stoi(cell);
        }
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("missing S column");
        double sv = std::stod(cell);
        double ev = 0.0;
        if (std::getline(ls, cell, ',')) ev = std::stod(cell);
        int site = geo.index(c);
        t.s[site] = sv;
        t.err[site] = ev;
    }
    return t;
}

inline TwoPointTable read_table_csv_file(const std::string& path, int d, int side, double beta) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open table: " + path);
    return read_table_csv(f, d, side, beta);
}

}  // namespace currentlab
