#include "changepoint/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "changepoint/errors.hpp"

namespace changepoint::model {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string lower(std::string s)
{
    std::ranges::transform(s, s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double parse_number(const std::string& field, long row, long column)
{
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(column) +
                             ": '" + field + "' is not a finite decimal number",
                         row, column);
    }
    return value;
}

const Eigen::MatrixXd& symmetrized(const Eigen::MatrixXd& sigma, Eigen::MatrixXd& scratch)
{
    if (sigma.rows() != sigma.cols()) throw DomainError("covariance matrix must be square");
    if (sigma.rows() == 0) throw DomainError("covariance matrix is empty");
    const double asymmetry = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
    if (!(asymmetry <= kSymmetryTolerance)) {
        throw DomainError("covariance matrix is not symmetric (max |S - S'| = " +
                          std::to_string(asymmetry) + ")");
    }
    if (asymmetry == 0.0) return sigma;
    scratch = 0.5 * (sigma + sigma.transpose());
    return scratch;
}

} // namespace

void validate(const Dataset& data)
{
    if (data.dims() < 1) throw DomainError("dataset needs at least one column");
    if (data.rows() < 4) throw DomainError("dataset needs at least 4 rows");
    if (static_cast<long>(data.labels.size()) != data.dims()) {
        throw DomainError("dataset labels do not match its column count");
    }
    if (!data.series.allFinite()) throw DomainError("dataset contains non-finite values");
}

Dataset select_columns(const Dataset& data, const std::vector<std::string>& columns)
{
    if (columns.empty()) return data;
    Dataset out;
    out.time_origin = data.time_origin;
    out.series.resize(data.series.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto it = std::ranges::find(data.labels, columns[c]);
        if (it == data.labels.end()) throw ParseError("unknown column '" + columns[c] + "'");
        const auto src = std::distance(data.labels.begin(), it);
        out.series.col(static_cast<Eigen::Index>(c)) = data.series.col(src);
        out.labels.push_back(columns[c]);
    }
    return out;
}

Dataset log_transform(const Dataset& data)
{
    for (Eigen::Index j = 0; j < data.series.cols(); ++j) {
        for (Eigen::Index i = 0; i < data.series.rows(); ++i) {
            if (!(data.series(i, j) > 0.0)) {
                const std::string label =
                    j < static_cast<Eigen::Index>(data.labels.size()) ? data.labels[j] : "";
                throw DomainError("log transform needs positive entries; row " +
                                  std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                                  (label.empty() ? "" : " (" + label + ")") + " is " +
                                  std::to_string(data.series(i, j)));
            }
        }
    }
    Dataset out = data;
    out.series = data.series.array().log().matrix();
    return out;
}

Dataset read_csv(std::istream& in)
{
    std::string line;
    long line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) throw ParseError("empty CSV input", 1, 0);
    if (line_no == 1 && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

    const bool has_time = lower(header[0]) == "time";
    const std::size_t first_value = has_time ? 1 : 0;
    if (header.size() <= first_value) throw ParseError("CSV header has no data columns", line_no, 1);

    std::vector<std::vector<double>> rows;
    std::optional<long> origin;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError("row " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(header.size()),
                             line_no, static_cast<long>(fields.size()));
        }
        if (has_time && !origin) {
            const double t = parse_number(fields[0], line_no, 1);
            if (t != std::floor(t)) throw ParseError("time column must hold integers", line_no, 1);
            origin = static_cast<long>(t);
        }
        std::vector<double> values;
        for (std::size_t c = first_value; c < fields.size(); ++c) {
            values.push_back(parse_number(fields[c], line_no, static_cast<long>(c) + 1));
        }
        rows.push_back(std::move(values));
    }

    Dataset data;
    data.labels.assign(header.begin() + static_cast<long>(first_value), header.end());
    data.time_origin = origin;
    data.series.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(data.labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            data.series(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return data;
}

Dataset read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_csv(in);
}

long ChangeModel::dims() const
{
    if (const auto* m = std::get_if<MultivariateChange>(&origin)) {
        return static_cast<long>(m->mu1.size());
    }
    return 1;
}

ChangeModel standardized_change_univariate(double mu1, double mu2, double sigma)
{
    if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw DomainError("means must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
    if (mu1 == mu2) throw DomainError("degenerate change: mu1 == mu2");
    return {std::fabs(mu1 - mu2) / sigma, UnivariateChange{mu1, mu2, sigma}};
}

Eigen::LLT<Eigen::MatrixXd> factor_covariance(const Eigen::MatrixXd& sigma)
{
    Eigen::MatrixXd scratch;
    Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(sigma, scratch));
    if (llt.info() != Eigen::Success) {
        throw FactorizationError("covariance matrix is not positive definite");
    }
    return llt;
}

double log_determinant(const Eigen::LLT<Eigen::MatrixXd>& factor)
{
    return 2.0 * factor.matrixLLT().diagonal().array().log().sum();
}

ChangeModel standardized_change_multivariate(const Eigen::VectorXd& mu1,
                                             const Eigen::VectorXd& mu2,
                                             const Eigen::MatrixXd& sigma)
{
    if (mu1.size() == 0 || mu1.size() != mu2.size() || sigma.rows() != mu1.size() ||
        sigma.cols() != mu1.size()) {
        throw DomainError("dimension mismatch between means and covariance");
    }
    if (!mu1.allFinite() || !mu2.allFinite()) throw DomainError("means must be finite");
    if (mu1 == mu2) throw DomainError("degenerate change: mu1 == mu2");

    Eigen::MatrixXd scratch;
    const Eigen::MatrixXd& sym = symmetrized(sigma, scratch);
    const auto llt = factor_covariance(sym);
    const Eigen::VectorXd whitened = llt.matrixL().solve(mu2 - mu1);
    return {whitened.norm(), MultivariateChange{mu1, mu2, sym}};
}

} // namespace changepoint::model
