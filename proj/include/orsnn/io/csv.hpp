#pragma once

#include <string>
#include <vector>

namespace orsnn {

/// Comma-separated table with a header row. Fields carry no quoting; a
/// field may be empty.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index; ParseError when absent.
    std::size_t column(const std::string& name) const;
    const std::string& at(std::size_t row, const std::string& name) const;
    std::string render() const;
};

/// Every row must have as many fields as the header (ParseError otherwise).
CsvTable parse_csv(const std::string& text);
CsvTable load_csv(const std::string& path);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace orsnn
