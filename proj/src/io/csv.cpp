#include "orsnn/io/csv.hpp"

#include <fstream>
#include <sstream>

#include "orsnn/error.hpp"

namespace orsnn {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
    return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    fail(ErrorKind::ParseError, "table has no column '" + name + "'");
}

const std::string& CsvTable::at(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
}

std::string CsvTable::render() const {
    std::string out = join(header) + '\n';
    for (const auto& r : rows) out += join(r) + '\n';
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            fail(ErrorKind::ParseError, "csv line " + std::to_string(lineno) + ": " + std::to_string(fields.size()) +
                                            " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) fail(ErrorKind::ParseError, "csv without a header row");
    return t;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::DatasetNotFound, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

CsvTable load_csv(const std::string& path) { return parse_csv(read_text(path)); }

}  // namespace orsnn
