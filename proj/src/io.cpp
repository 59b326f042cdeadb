#include "chac/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chac {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

bool parse_double(const std::string& field, double& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t') ++end;
    return *end == '\0';
}

bool parse_int(const std::string& field, std::int64_t& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtoll(begin, &end, 10);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t') ++end;
    return *end == '\0';
}

std::ifstream open_input(const std::string& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) {
        throw ParseError("cannot open input file: " + path);
    }
    return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    return out;
}

}  // namespace

Dataset read_points_csv(std::istream& in, const std::string& name) {
    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    bool first_data_line = true;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        row.clear();
        bool numeric = true;
        for (const std::string& f : fields) {
            double v;
            if (!parse_double(f, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (first_data_line) {
                first_data_line = false;  // header row
                continue;
            }
            throw ParseError(name + ": row " + std::to_string(lineno) + ": non-numeric field");
        }
        first_data_line = false;
        if (out.dim != 0 && row.size() != out.dim) {
            throw ParseError(name + ": row " + std::to_string(lineno) + ": expected " +
                             std::to_string(out.dim) + " fields, got " +
                             std::to_string(row.size()));
        }
        for (const double v : row) {
            if (!std::isfinite(v)) {
                throw ParseError(name + ": row " + std::to_string(lineno) +
                                 ": non-finite value");
            }
        }
        out.push_back(row);
    }
    return out;
}

Dataset read_points_fvecs(std::istream& in, const std::string& name) {
    Dataset out;
    std::size_t record = 0;
    for (;;) {
        std::int32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof(d));
        if (in.gcount() == 0 && in.eof()) break;
        ++record;
        if (in.gcount() != sizeof(d) || d <= 0) {
            throw ParseError(name + ": record " + std::to_string(record) +
                             ": bad dimension header");
        }
        if (out.dim != 0 && static_cast<std::size_t>(d) != out.dim) {
            throw ParseError(name + ": record " + std::to_string(record) +
                             ": dimension mismatch (" + std::to_string(d) + " vs " +
                             std::to_string(out.dim) + ")");
        }
        std::vector<float> buf(static_cast<std::size_t>(d));
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float)) {
            throw ParseError(name + ": record " + std::to_string(record) + ": truncated");
        }
        std::vector<double> row(buf.size());
        for (std::size_t i = 0; i < buf.size(); ++i) {
            if (!std::isfinite(buf[i])) {
                throw ParseError(name + ": record " + std::to_string(record) +
                                 ": non-finite value");
            }
            row[i] = static_cast<double>(buf[i]);
        }
        out.push_back(row);
    }
    return out;
}

Dataset load_points(const std::string& path, PointFormat format) {
    if (format == PointFormat::csv) {
        std::ifstream in = open_input(path, std::ios::in);
        return read_points_csv(in, path);
    }
    std::ifstream in = open_input(path, std::ios::in | std::ios::binary);
    return read_points_fvecs(in, path);
}

void write_points(const Dataset& points, const std::string& path, PointFormat format) {
    if (format == PointFormat::csv) {
        std::ofstream out = open_output(path, std::ios::out);
        char buf[64];
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto row = points[i];
            for (std::size_t j = 0; j < row.size(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
                out << (j ? "," : "") << buf;
            }
            out << '\n';
        }
        return;
    }
    std::ofstream out = open_output(path, std::ios::out | std::ios::binary);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto row = points[i];
        const std::int32_t d = static_cast<std::int32_t>(row.size());
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        for (const double v : row) {
            const float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    }
}

std::vector<std::int64_t> load_labels(const std::string& path) {
    std::ifstream in = open_input(path, std::ios::in);
    std::vector<std::int64_t> out;
    std::string line;
    std::size_t lineno = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::int64_t v;
        if (!parse_int(line, v)) {
            if (first_data_line) {
                first_data_line = false;  // header row
                continue;
            }
            throw ParseError(path + ": row " + std::to_string(lineno) + ": expected an integer");
        }
        first_data_line = false;
        out.push_back(v);
    }
    return out;
}

void write_dendrogram(const Dendrogram& dend, const std::string& path) {
    std::ofstream out = open_output(path, std::ios::out);
    out << "left_id,right_id,new_id,distance,size\n";
    char buf[128];
    for (const MergeRecord& m : dend.merges) {
        std::snprintf(buf, sizeof(buf), "%llu,%llu,%llu,%.17g,%llu",
                      static_cast<unsigned long long>(m.left_id),
                      static_cast<unsigned long long>(m.right_id),
                      static_cast<unsigned long long>(m.new_id), m.distance,
                      static_cast<unsigned long long>(m.new_size));
        out << buf << '\n';
    }
}

Dendrogram load_dendrogram(const std::string& path) {
    std::ifstream in = open_input(path, std::ios::in);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path + ": empty dendrogram file");
    }
    Dendrogram dend;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw ParseError(path + ": row " + std::to_string(lineno) + ": expected 5 fields");
        }
        MergeRecord m;
        std::int64_t a, b, c, s;
        double dist;
        if (!parse_int(fields[0], a) || !parse_int(fields[1], b) || !parse_int(fields[2], c) ||
            !parse_double(fields[3], dist) || !parse_int(fields[4], s) || a < 0 || b < 0 ||
            c < 0 || s < 1) {
            throw ParseError(path + ": row " + std::to_string(lineno) + ": bad record");
        }
        m.left_id = static_cast<std::uint64_t>(a);
        m.right_id = static_cast<std::uint64_t>(b);
        m.new_id = static_cast<std::uint64_t>(c);
        m.distance = dist;
        m.new_size = static_cast<std::uint64_t>(s);
        dend.merges.push_back(m);
    }
    if (dend.merges.empty()) {
        throw ParseError(path + ": no merge records");
    }
    dend.num_leaves = static_cast<std::size_t>(dend.merges.front().new_id);
    validate_dendrogram(dend);
    return dend;
}

void write_leaf_map(const std::vector<std::uint32_t>& leaf_of_input, const std::string& path) {
    std::ofstream out = open_output(path, std::ios::out);
    out << "input_index,leaf_id\n";
    for (std::size_t i = 0; i < leaf_of_input.size(); ++i) {
        out << i << ',' << leaf_of_input[i] << '\n';
    }
}

std::vector<std::uint32_t> load_leaf_map(const std::string& path) {
    std::ifstream in = open_input(path, std::ios::in);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path + ": empty leaf map");
    }
    std::vector<std::uint32_t> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        std::int64_t idx, leaf;
        if (fields.size() != 2 || !parse_int(fields[0], idx) || !parse_int(fields[1], leaf) ||
            idx != static_cast<std::int64_t>(out.size()) || leaf < 0) {
            throw ParseError(path + ": row " + std::to_string(lineno) + ": bad record");
        }
        out.push_back(static_cast<std::uint32_t>(leaf));
    }
    return out;
}

nlohmann::json stats_to_json(const RunStats& stats) {
    return {
        {"merges", stats.merges},
        {"stale_dequeues", stats.stale_dequeues},
        {"requeues", stats.requeues},
        {"max_requeues_per_centroid", stats.max_requeues_per_centroid},
        {"nns_queries", stats.nns_queries},
        {"nns_inserts", stats.nns_inserts},
        {"nns_deletes", stats.nns_deletes},
        {"identical_centroid_merges", stats.identical_centroid_merges},
        {"gamma", stats.gamma()},
        {"phases",
         {{"init_seconds", stats.init_seconds},
          {"loop_seconds", stats.loop_seconds},
          {"total_seconds", stats.total_seconds}}},
    };
}

void emit_stats(const RunStats& stats, const std::string& path, const nlohmann::json& extra) {
    nlohmann::json j = stats_to_json(stats);
    for (const auto& [key, value] : extra.items()) {
        j[key] = value;
    }
    std::ofstream out = open_output(path, std::ios::out);
    out << j.dump(2) << '\n';
}

}  // namespace chac
