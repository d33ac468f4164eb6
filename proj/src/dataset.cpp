#include "sagp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sagp/errors.hpp"
#include "sagp/textio.hpp"

namespace sagp {
namespace {

struct ParsedCsv {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};

ParsedCsv parse_csv(std::istream& in, const std::string& name) {
    ParsedCsv table;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view stripped = strip_cr(line);
        if (line_no == 1) {
            for (const auto part : split(stripped, ','))
                table.names.emplace_back(part);
            if (table.names.empty() || (table.names.size() == 1 && table.names[0].empty()))
                throw data_error(name + ": empty header row");
            continue;
        }
        if (stripped.empty()) continue;
        const auto parts = split(stripped, ',');
        if (parts.size() != table.names.size())
            throw data_error(name + ": row " + std::to_string(line_no) + " has " +
                             std::to_string(parts.size()) + " cells, expected " +
                             std::to_string(table.names.size()));
        std::vector<double> row(parts.size());
        for (std::size_t c = 0; c < parts.size(); ++c) {
            double v;
            if (!parse_double(parts[c], v) || !std::isfinite(v))
                throw data_error(name + ": row " + std::to_string(line_no) + ", column " +
                                 table.names[c] + ": cannot use value '" +
                                 std::string(parts[c]) + "'");
            row[c] = v;
        }
        table.rows.push_back(std::move(row));
    }
    if (line_no == 0) throw data_error(name + ": empty file");
    if (table.rows.empty()) throw data_error(name + ": no data rows");
    return table;
}

// Maps header names to the column order x1..xd[, y]; complains about gaps,
// duplicates, and strangers by name.
std::vector<int> resolve_columns(const std::vector<std::string>& names, const std::string& name,
                                 bool require_y, int& d_out) {
    const std::size_t d = names.size() - (require_y ? 1 : 0);
    if (d < 1) throw data_error(name + ": need at least one x column");
    std::vector<int> order(names.size(), -1);  // order[k] = position of x_{k+1}, last slot y
    std::string problems;
    auto complain = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    std::vector<int> where(d + 1, -1);
    for (std::size_t c = 0; c < names.size(); ++c) {
        const std::string& col = names[c];
        std::size_t slot = static_cast<std::size_t>(-1);
        if (col == "y" && require_y) {
            slot = d;
        } else if (col.size() >= 2 && col[0] == 'x') {
            std::int64_t k;
            if (parse_int64(std::string_view(col).substr(1), k) && k >= 1 &&
                k <= static_cast<std::int64_t>(d))
                slot = static_cast<std::size_t>(k - 1);
        }
        if (slot == static_cast<std::size_t>(-1)) {
            complain("unexpected column '" + col + "'");
            continue;
        }
        if (where[slot] != -1) {
            complain("duplicate column '" + col + "'");
            continue;
        }
        where[slot] = static_cast<int>(c);
    }
    for (std::size_t k = 0; k < d; ++k)
        if (where[k] == -1) complain("missing column 'x" + std::to_string(k + 1) + "'");
    if (require_y && where[d] == -1) complain("missing column 'y'");
    if (!problems.empty()) throw data_error(name + ": " + problems);
    d_out = static_cast<int>(d);
    where.resize(require_y ? d + 1 : d);
    return where;
}

}  // namespace

RawTable load_csv(std::istream& in, const std::string& name, bool require_y) {
    const ParsedCsv table = parse_csv(in, name);
    int d = 0;
    const std::vector<int> where = resolve_columns(table.names, name, require_y, d);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    RawTable raw;
    raw.X.resize(n, d);
    raw.y.resize(require_y ? n : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (int k = 0; k < d; ++k) raw.X(i, k) = row[static_cast<std::size_t>(where[static_cast<std::size_t>(k)])];
        if (require_y) raw.y[i] = row[static_cast<std::size_t>(where[static_cast<std::size_t>(d)])];
    }
    return raw;
}

RawTable load_csv(const std::string& path, bool require_y) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open file");
    return load_csv(in, path, require_y);
}

Eigen::MatrixXd load_points_csv(const std::string& path) {
    return load_csv(path, /*require_y=*/false).X;
}

Eigen::MatrixXd load_columns_csv(const std::string& path, const std::vector<std::string>& names) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open file");
    const ParsedCsv table = parse_csv(in, path);
    std::vector<std::size_t> where;
    for (const std::string& want : names) {
        const auto it = std::find(table.names.begin(), table.names.end(), want);
        if (it == table.names.end())
            throw data_error(path + ": missing column '" + want + "'");
        where.push_back(static_cast<std::size_t>(it - table.names.begin()));
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(table.rows.size()),
                        static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        for (std::size_t c = 0; c < where.size(); ++c)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                table.rows[i][where[c]];
    return out;
}

Dataset standardize(const RawTable& raw) {
    const Eigen::Index n = raw.X.rows();
    const Eigen::Index d = raw.X.cols();
    if (n < 2) throw data_error("standardize: need at least 2 rows");
    if (raw.y.size() != n) throw data_error("standardize: X and y row counts differ");

    Dataset data;
    data.transform.x_min = raw.X.colwise().minCoeff();
    data.transform.x_max = raw.X.colwise().maxCoeff();
    std::string problems;
    for (Eigen::Index k = 0; k < d; ++k)
        if (!(data.transform.x_max[k] > data.transform.x_min[k])) {
            if (!problems.empty()) problems += "; ";
            problems += "column x" + std::to_string(k + 1) + " is constant";
        }
    data.transform.y_mean = raw.y.mean();
    const double ss = (raw.y.array() - data.transform.y_mean).square().sum();
    data.transform.y_sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(data.transform.y_sd > 0.0)) {
        if (!problems.empty()) problems += "; ";
        problems += "column y is constant";
    }
    if (!problems.empty()) throw data_error("standardize: " + problems);

    data.X.resize(n, d);
    for (Eigen::Index k = 0; k < d; ++k)
        data.X.col(k) = (raw.X.col(k).array() - data.transform.x_min[k]) /
                        (data.transform.x_max[k] - data.transform.x_min[k]);
    data.y = (raw.y.array() - data.transform.y_mean) / data.transform.y_sd;
    return data;
}

Eigen::MatrixXd standardize_points(const Eigen::MatrixXd& pts, const Transform& transform,
                                   long* clipped_count) {
    if (pts.cols() != transform.dim())
        throw invalid_input_error("standardize_points: dimension mismatch");
    Eigen::MatrixXd out(pts.rows(), pts.cols());
    long clipped = 0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        bool any = false;
        for (Eigen::Index k = 0; k < pts.cols(); ++k) {
            double u = transform.to_unit(pts(i, k), k);
            if (u < 0.0 || u > 1.0) {
                u = std::clamp(u, 0.0, 1.0);
                any = true;
            }
            out(i, k) = u;
        }
        clipped += any;
    }
    if (clipped_count) *clipped_count = clipped;
    return out;
}

void save_dataset(const Dataset& data, std::ostream& out) {
    out << "sagp-data v1\n";
    out << "n " << data.X.rows() << " d " << data.X.cols() << "\n";
    for (Eigen::Index k = 0; k < data.X.cols(); ++k)
        out << "x " << (k + 1) << " " << format_double(data.transform.x_min[k]) << " "
            << format_double(data.transform.x_max[k]) << "\n";
    out << "y " << format_double(data.transform.y_mean) << " "
        << format_double(data.transform.y_sd) << "\n";
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        for (Eigen::Index k = 0; k < data.X.cols(); ++k)
            out << format_double(data.X(i, k)) << " ";
        out << format_double(data.y[i]) << "\n";
    }
}

Dataset load_dataset(std::istream& in) {
    std::string line;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw data_error(std::string("data file: missing ") + what);
        line.assign(strip_cr(line));
    };
    auto to_double = [](std::string_view sv, const char* what) {
        double v;
        if (!parse_double(sv, v))
            throw data_error(std::string("data file: bad number for ") + what);
        return v;
    };

    next_line("header");
    if (line != "sagp-data v1") throw data_error("data file: unrecognized header");
    next_line("shape");
    auto parts = split_ws(line);
    std::int64_t n, d;
    if (parts.size() != 4 || parts[0] != "n" || parts[2] != "d" || !parse_int64(parts[1], n) ||
        !parse_int64(parts[3], d) || n < 1 || d < 1)
        throw data_error("data file: bad shape line");

    Dataset data;
    data.transform.x_min.resize(d);
    data.transform.x_max.resize(d);
    for (std::int64_t k = 0; k < d; ++k) {
        next_line("x transform");
        parts = split_ws(line);
        std::int64_t idx;
        if (parts.size() != 4 || parts[0] != "x" || !parse_int64(parts[1], idx) || idx != k + 1)
            throw data_error("data file: bad x transform line");
        data.transform.x_min[k] = to_double(parts[2], "x min");
        data.transform.x_max[k] = to_double(parts[3], "x max");
    }
    next_line("y transform");
    parts = split_ws(line);
    if (parts.size() != 3 || parts[0] != "y") throw data_error("data file: bad y transform line");
    data.transform.y_mean = to_double(parts[1], "y mean");
    data.transform.y_sd = to_double(parts[2], "y sd");

    data.X.resize(n, d);
    data.y.resize(n);
    for (std::int64_t i = 0; i < n; ++i) {
        next_line("data row");
        parts = split_ws(line);
        if (parts.size() != static_cast<std::size_t>(d + 1))
            throw data_error("data file: row " + std::to_string(i + 1) + " has wrong width");
        for (std::int64_t k = 0; k < d; ++k) data.X(i, k) = to_double(parts[static_cast<std::size_t>(k)], "x value");
        data.y[i] = to_double(parts[static_cast<std::size_t>(d)], "y value");
    }
    return data;
}

void save_dataset_file(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path + ": cannot open for writing");
    save_dataset(data, out);
    if (!out) throw data_error(path + ": write failed");
}

Dataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open file");
    return load_dataset(in);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& columns) {
    if (header.size() != static_cast<std::size_t>(columns.cols()))
        throw invalid_input_error("write_csv: header width mismatch");
    for (std::size_t c = 0; c < header.size(); ++c)
        out << (c ? "," : "") << header[c];
    out << "\n";
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
        for (Eigen::Index c = 0; c < columns.cols(); ++c)
            out << (c ? "," : "") << format_double(columns(i, c));
        out << "\n";
    }
}

}  // namespace sagp
