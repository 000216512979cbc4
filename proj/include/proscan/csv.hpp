#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace proscan {

/// Shortest decimal string that round-trips the exact double value.
std::string format_double(double value);

/// Writes rows of doubles under a fixed header. All values use round-trip
/// formatting so re-parsing reproduces the exact binary values.
class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);
    void close();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::string buffer_;
    std::size_t column_count_;
    bool closed_ = false;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Parses a numeric CSV with a mandatory header. Throws ParseError with
    /// 1-based line/column positions on malformed input.
    static CsvTable read(const std::filesystem::path& path);

    std::size_t column_index(const std::string& name) const;  // throws ParseError
    std::vector<double> column(const std::string& name) const;
};

}  // namespace proscan
