#include "eshift/csv.hpp"

#include <cstdio>
#include <fstream>

#include "eshift/errors.hpp"

namespace eshift {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
              const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary: identical bytes on any host
    if (!out) throw DataError("cannot write csv: " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw std::invalid_argument("csv row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i].text;
        }
        out << '\n';
    }
    if (!out) throw DataError("csv write failed: " + path.string());
}

}  // namespace eshift
