#pragma once

#include <string>
#include <vector>

namespace kppbbm {

// Writes to a temporary sibling and renames over the target.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

std::string sha256_hex(const std::string& data);

// Shortest round-trip decimal form.
std::string fmt_double(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    CsvTable& row();
    CsvTable& cell(double v);
    CsvTable& cell(long long v);
    CsvTable& cell(const std::string& v);
    CsvTable& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string utc_timestamp();

} // namespace kppbbm
