#include "covnet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace covnet {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool blank(const std::string& line) { return trim(line).empty(); }

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

CsvTable parse_csv_table(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    CsvTable table;
    while (std::getline(in, line)) {
        ++line_no;
        if (!blank(line)) break;
    }
    if (line_no == 0 || blank(line)) throw ParseError(source + ": missing header row");
    table.header = split_fields(line);
    for (const auto& name : table.header) {
        if (name.empty()) throw ParseError(source + ":" + std::to_string(line_no) + ": empty column name");
    }
    const std::size_t cols = table.header.size();

    std::vector<double> cells;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto fields = split_fields(line);
        if (fields.size() != cols) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(cols) + " fields, found " +
                             std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string& f = fields[c];
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
                throw ParseError(source + ":" + std::to_string(line_no) + ": column '" +
                                 table.header[c] + "' has non-numeric value '" + f + "'");
            }
            if (!std::isfinite(v)) {
                throw ParseError(source + ":" + std::to_string(line_no) + ": column '" +
                                 table.header[c] + "' has non-finite value '" + f + "'");
            }
            cells.push_back(v);
        }
        ++rows;
    }
    if (in.bad()) throw IoError(source + ": read failure");
    table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                cells[r * cols + c];
        }
    }
    return table;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
    auto in = open_input(path);
    CsvTable t = parse_csv_table(in, path.string());
    auto sorted = t.header;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ParseError(path.string() + ": duplicate column names in header");
    }
    return t;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_csv_table(std::ostream& out, const std::vector<std::string>& header,
                     const Eigen::MatrixXd& values) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out << (c ? "," : "") << format_double(values(r, c));
        }
        out << '\n';
    }
}

Dataset read_dataset(const std::filesystem::path& path) {
    CsvTable t = read_csv_table(path);
    if (t.values.rows() == 0) throw ParseError(path.string() + ": no data rows");
    return Dataset(std::move(t.values), std::move(t.header));
}

CovariateMatrix read_covariates(const std::filesystem::path& path) {
    CsvTable t = read_csv_table(path);
    if (t.values.rows() == 0) throw ParseError(path.string() + ": no data rows");
    return CovariateMatrix(std::move(t.values), std::move(t.header));
}

std::vector<Edge> parse_edge_list(std::istream& in, const std::vector<std::string>& names,
                                  const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!blank(line)) break;
    }
    if (blank(line)) throw ParseError(source + ": missing header row");
    const auto header = split_fields(line);
    if (header.size() != 2 || header[0] != "from" || header[1] != "to") {
        throw ParseError(source + ":" + std::to_string(line_no) + ": header must be 'from,to'");
    }

    const auto resolve = [&](const std::string& token) -> NodeId {
        const auto it = std::find(names.begin(), names.end(), token);
        if (it != names.end()) return static_cast<NodeId>(it - names.begin());
        int id = 0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), id);
        if (!token.empty() && res.ec == std::errc() && res.ptr == token.data() + token.size() &&
            id >= 1 && id <= static_cast<int>(names.size())) {
            return id - 1;
        }
        throw ParseError(source + ":" + std::to_string(line_no) + ": unknown node '" + token + "'");
    };

    std::vector<Edge> edges;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": expected 2 fields");
        }
        edges.push_back({resolve(fields[0]), resolve(fields[1])});
    }
    return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path,
                                 const std::vector<std::string>& names) {
    auto in = open_input(path);
    return parse_edge_list(in, names, path.string());
}

void write_edge_list(std::ostream& out, const Dag& dag, const std::vector<std::string>& names) {
    if (names.size() != static_cast<std::size_t>(dag.p())) {
        throw ConstraintError("name count does not match the graph");
    }
    out << "from,to\n";
    for (const Edge& e : dag.edges()) {
        out << names[static_cast<std::size_t>(e.from)] << ',' << names[static_cast<std::size_t>(e.to)]
            << '\n';
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace covnet
