#pragma once

#include <map>
#include <string>
#include <vector>

namespace blowup {

/// %.17g formatting: round-trip exact and byte-stable across runs, which the
/// bit-identical-output contract of the CLI depends on.
std::string fmt_g17(double v);

/// Minimal CSV writer: header row then data rows, all doubles via fmt_g17.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);
    void row(const std::vector<double>& values);
    /// Write to file; creates parent directories if needed. Throws on failure.
    void save(const std::string& path) const;

private:
    std::vector<std::string> cols_;
    std::vector<std::vector<double>> rows_;
};

/// Ordered key = value report (flat text, one pair per line, '#' comments).
class KvReport {
public:
    void set(const std::string& key, double value);
    void set_str(const std::string& key, const std::string& value);
    void save(const std::string& path) const;
    std::string str() const;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

void ensure_parent_dir(const std::string& path);

} // namespace blowup
