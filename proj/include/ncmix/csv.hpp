#pragma once

// Deterministic CSV output and the run-manifest sidecar. All numbers are
// printed with snprintf %g conversions under the "C" locale convention
// ('.' decimal separator, no grouping), so identical inputs give
// byte-identical files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncmix {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& w) : std::runtime_error(w) {}
};

// Full round-trip precision; used for allocation files that are re-checked
// against the feasibility tolerances after reading.
inline std::string fmt_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_g(double v, int digits = 12) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Sidecar recording what produced an output file set. Contains only
// deterministic fields.
inline void write_manifest(const std::string& stem, const std::string& command,
                           const std::vector<std::pair<std::string, std::string>>& fields) {
    std::ostringstream out;
    out << "command: " << command << "\n";
    for (const auto& [k, v] : fields) out << k << ": " << v << "\n";
    write_file(stem + ".manifest.txt", out.str());
}

}  // namespace ncmix
