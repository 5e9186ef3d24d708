#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bridgesteer/fields.hpp"

namespace bridgesteer {

/// 17 significant digits; round-trips doubles exactly.
std::string format_full(double v);

struct CsvTable {
    std::string header;                     // comma-joined column names
    std::vector<std::vector<double>> rows;  // numeric cells, formatted at write time
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Header `x,value`, file `<name>_<slice_index>.csv`.
void write_field_csv(const std::filesystem::path& dir, const std::string& name,
                     std::size_t slice_index, const RealField& field);

/// Header `x,re,im`.
void write_wave_csv(const std::filesystem::path& dir, const std::string& name,
                    std::size_t slice_index, const WaveField& field);

/// Two-column `x,value` file with arbitrary strictly monotone abscissa.
struct XyData {
    std::vector<double> x;
    std::vector<double> y;
};
XyData read_xy_csv(const std::filesystem::path& path);

/// Monotone cubic (Fritsch-Carlson) interpolation of tabulated data.
/// Query abscissas must lie inside the data range.
std::vector<double> pchip_interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const std::vector<double>& queries);

}  // namespace bridgesteer
