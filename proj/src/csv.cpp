#include "vvmfg/csv.hpp"

#include <cstdio>

#include "vvmfg/errors.hpp"

namespace vvmfg {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvFile::CsvFile(const std::string& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw ConfigError("csv: cannot open '" + path + "' for writing");
    out_ << header << "\n";
}

void CsvFile::raw_row(const std::string& line) { out_ << line << "\n"; }

void CsvFile::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ",";
        out_ << fields[i];
    }
    out_ << "\n";
}

}  // namespace vvmfg
