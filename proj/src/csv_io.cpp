#include "bridgesteer/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bridgesteer {

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open " + path.string());
    out << table.header << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_full(row[i]);
        }
        out << "\n";
    }
}

void write_field_csv(const std::filesystem::path& dir, const std::string& name,
                     std::size_t slice_index, const RealField& field) {
    CsvTable t;
    t.header = "x,value";
    const SpaceTimeGrid& g = field.grid();
    t.rows.reserve(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) t.rows.push_back({g.x(i), field[i]});
    write_csv(dir / (name + "_" + std::to_string(slice_index) + ".csv"), t);
}

void write_wave_csv(const std::filesystem::path& dir, const std::string& name,
                    std::size_t slice_index, const WaveField& field) {
    CsvTable t;
    t.header = "x,re,im";
    const SpaceTimeGrid& g = field.grid();
    t.rows.reserve(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        t.rows.push_back({g.x(i), field[i].real(), field[i].imag()});
    }
    write_csv(dir / (name + "_" + std::to_string(slice_index) + ".csv"), t);
}

XyData read_xy_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("read_xy_csv: cannot open " + path.string());
    XyData data;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
            throw Error("read_xy_csv: expected two comma-separated columns in " + path.string());
        }
        if (first) {
            first = false;
            try {
                std::stod(a);
            } catch (...) {
                continue;  // header row
            }
        }
        data.x.push_back(std::stod(a));
        data.y.push_back(std::stod(b));
    }
    if (data.x.size() < 4) throw Error("read_xy_csv: need at least 4 data rows");
    for (std::size_t i = 1; i < data.x.size(); ++i) {
        if (!(data.x[i] > data.x[i - 1])) {
            throw Error("read_xy_csv: abscissa must be strictly increasing");
        }
    }
    return data;
}

std::vector<double> pchip_interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const std::vector<double>& queries) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw Error("pchip_interpolate: bad table");

    std::vector<double> h(n - 1), delta(n - 1), d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = xs[i + 1] - xs[i];
        delta[i] = (ys[i + 1] - ys[i]) / h[i];
    }
    // Fritsch-Carlson derivative limiter: keeps the interpolant monotone on
    // monotone data segments and inside the local data range
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }

    std::vector<double> out;
    out.reserve(queries.size());
    for (double q : queries) {
        if (q < xs.front() - 1e-12 || q > xs.back() + 1e-12) {
            throw Error("pchip_interpolate: query outside the data range");
        }
        std::size_t seg = 0;
        while (seg + 2 < n && xs[seg + 1] < q) ++seg;
        const double t = (q - xs[seg]) / h[seg];
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        out.push_back(h00 * ys[seg] + h10 * h[seg] * d[seg] + h01 * ys[seg + 1] +
                      h11 * h[seg] * d[seg + 1]);
    }
    return out;
}

}  // namespace bridgesteer
