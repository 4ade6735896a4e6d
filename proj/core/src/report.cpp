#include "blowup/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace blowup {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : cols_(std::move(columns)) {}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != cols_.size())
        throw std::invalid_argument("CsvWriter: column count mismatch");
    rows_.push_back(values);
}

void CsvWriter::save(const std::string& path) const {
    ensure_parent_dir(path);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("CsvWriter: cannot open " + path);
    for (std::size_t i = 0; i < cols_.size(); ++i)
        os << cols_[i] << (i + 1 < cols_.size() ? "," : "\n");
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i)
            os << fmt_g17(r[i]) << (i + 1 < r.size() ? "," : "\n");
    }
}

void KvReport::set(const std::string& key, double value) { items_.emplace_back(key, fmt_g17(value)); }

void KvReport::set_str(const std::string& key, const std::string& value) {
    items_.emplace_back(key, value);
}

std::string KvReport::str() const {
    std::string out;
    for (const auto& [k, v] : items_) out += k + " = " + v + "\n";
    return out;
}

void KvReport::save(const std::string& path) const {
    ensure_parent_dir(path);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("KvReport: cannot open " + path);
    os << str();
}

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

} // namespace blowup
