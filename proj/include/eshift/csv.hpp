#pragma once

#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

namespace eshift {

/// 17 significant digits: enough for any 64-bit real to parse back bit-exactly.
std::string format_real(double v);

struct CsvCell {
    std::string text;
    CsvCell(double v) : text(format_real(v)) {}
    template <typename T, std::enable_if_t<std::is_integral_v<T>, int> = 0>
    CsvCell(T v) : text(std::to_string(v)) {}
    CsvCell(const char* s) : text(s) {}
    CsvCell(std::string s) : text(std::move(s)) {}
};

using CsvRow = std::vector<CsvCell>;

/// Header row plus one line per record.
void emit_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
              const std::vector<CsvRow>& rows);

}  // namespace eshift
