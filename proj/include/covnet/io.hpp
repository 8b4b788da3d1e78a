#ifndef COVNET_IO_HPP
#define COVNET_IO_HPP

#include "covnet/model.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace covnet {

/// Malformed input file: header mismatch, non-numeric cell, ragged rows.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

/// Comma-separated numeric table with a header row. `source` names the
/// input in diagnostics.
CsvTable parse_csv_table(std::istream& in, const std::string& source);
CsvTable read_csv_table(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

void write_csv_table(std::ostream& out, const std::vector<std::string>& header,
                     const Eigen::MatrixXd& values);

Dataset read_dataset(const std::filesystem::path& path);
CovariateMatrix read_covariates(const std::filesystem::path& path);

/// `from,to` edge list. Entries resolve to a node by exact name first, then
/// as a 1-indexed id.
std::vector<Edge> parse_edge_list(std::istream& in, const std::vector<std::string>& names,
                                  const std::string& source);
std::vector<Edge> read_edge_list(const std::filesystem::path& path,
                                 const std::vector<std::string>& names);
void write_edge_list(std::ostream& out, const Dag& dag, const std::vector<std::string>& names);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace covnet

#endif  // COVNET_IO_HPP
