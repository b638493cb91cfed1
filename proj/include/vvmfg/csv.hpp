#ifndef VVMFG_CSV_HPP
#define VVMFG_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace vvmfg {

// 17 significant digits: enough to round-trip any double, and the fixed width
// CSV reproducibility is checked against.
std::string fmt17(double v);

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& header);

    void raw_row(const std::string& line);
    void row(const std::vector<std::string>& fields);

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace vvmfg

#endif
