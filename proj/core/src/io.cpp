#include "afpca/io.hpp"

#include "afpca/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <utility>

namespace afpca {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

double parse_number(const std::string& field, const std::string& column, int line_number) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw DataError("non-numeric value '" + field + "' in column '" + column + "' at line " +
                        std::to_string(line_number));
    return value;
}

struct CsvReader {
    std::ifstream stream;
    std::string path;
    int line_number = 0;

    explicit CsvReader(const std::string& p) : stream(p), path(p) {
        if (!stream) throw DataError("cannot open '" + p + "'");
    }

    bool next(std::string& line) {
        while (std::getline(stream, line)) {
            ++line_number;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!trim(line).empty()) return true;
        }
        return false;
    }
};

std::vector<int> header_indices(const std::vector<std::string>& header,
                                const std::vector<std::string>& required,
                                const std::string& path) {
    std::vector<int> indices;
    for (const auto& name : required) {
        int found = -1;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (lowercase(header[c]) == name) {
                found = static_cast<int>(c);
                break;
            }
        }
        if (found < 0)
            throw DataError("missing required column '" + name + "' in '" + path + "'");
        indices.push_back(found);
    }
    return indices;
}

}  // namespace

LongFormatTable parse_long_csv(const std::string& path) {
    CsvReader reader(path);
    std::string line;
    if (!reader.next(line)) throw DataError("empty file '" + path + "'");
    const auto columns = header_indices(split_line(line), {"subject_id", "t", "y"}, path);

    LongFormatTable table;
    while (reader.next(line)) {
        const auto fields = split_line(line);
        const int needed = std::max({columns[0], columns[1], columns[2]});
        if (static_cast<int>(fields.size()) <= needed)
            throw DataError("too few fields at line " + std::to_string(reader.line_number));
        LongRow row;
        row.subject = fields[columns[0]];
        row.t = parse_number(fields[columns[1]], "t", reader.line_number);
        row.y = parse_number(fields[columns[2]], "y", reader.line_number);
        if (!std::isfinite(row.t) || !std::isfinite(row.y))
            throw DataError("non-finite value at line " + std::to_string(reader.line_number));
        table.push_back(std::move(row));
    }
    if (table.empty()) throw DataError("no data rows in '" + path + "'");
    return table;
}

FunctionalDataset ingest_csv(const std::string& path) {
    const LongFormatTable table = parse_long_csv(path);

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> groups;
    for (const auto& row : table) {
        auto [it, inserted] = groups.try_emplace(row.subject);
        if (inserted) order.push_back(row.subject);
        it->second.emplace_back(row.t, row.y);
    }

    FunctionalDataset data;
    data.a = table.front().t;
    data.b = table.front().t;
    for (const auto& row : table) {
        data.a = std::min(data.a, row.t);
        data.b = std::max(data.b, row.t);
    }
    for (const auto& id : order) {
        auto& points = groups[id];
        std::stable_sort(points.begin(), points.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t j = 1; j < points.size(); ++j)
            if (points[j].first == points[j - 1].first)
                throw DataError("duplicate abscissa t = " + std::to_string(points[j].first) +
                                " for subject '" + id + "'");
        FunctionalDataset::Subject subject;
        subject.id = id;
        subject.t.resize(points.size());
        subject.y.resize(points.size());
        for (std::size_t j = 0; j < points.size(); ++j) {
            subject.t[j] = points[j].first;
            subject.y[j] = points[j].second;
        }
        data.subjects.push_back(std::move(subject));
    }
    return data;
}

void write_dataset_csv(const FunctionalDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "subject_id,t,y\n";
    for (const auto& subject : data.subjects)
        for (Eigen::Index j = 0; j < subject.t.size(); ++j)
            out << subject.id << ',' << format_double(subject.t[j]) << ','
                << format_double(subject.y[j]) << '\n';
}

void read_ty_csv(const std::string& path, Eigen::VectorXd& t, Eigen::VectorXd& y) {
    CsvReader reader(path);
    std::string line;
    if (!reader.next(line)) throw DataError("empty file '" + path + "'");
    const auto columns = header_indices(split_line(line), {"t", "y"}, path);

    std::vector<double> tv;
    std::vector<double> yv;
    while (reader.next(line)) {
        const auto fields = split_line(line);
        const int needed = std::max(columns[0], columns[1]);
        if (static_cast<int>(fields.size()) <= needed)
            throw DataError("too few fields at line " + std::to_string(reader.line_number));
        tv.push_back(parse_number(fields[columns[0]], "t", reader.line_number));
        yv.push_back(parse_number(fields[columns[1]], "y", reader.line_number));
    }
    if (tv.empty()) throw DataError("no data rows in '" + path + "'");
    t = Eigen::Map<Eigen::VectorXd>(tv.data(), static_cast<Eigen::Index>(tv.size()));
    y = Eigen::Map<Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
}

std::string format_double(double v) {
    if (!std::isfinite(v)) return "NA";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

}  // namespace afpca
