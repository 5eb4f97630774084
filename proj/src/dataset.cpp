#include "constancy/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace constancy {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_cell(const std::string& cell, long row, const std::string& column) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE ||
        !std::isfinite(v)) {
        throw_data("row " + std::to_string(row) + ", column '" + column +
                   "': cell '" + cell + "' is not a number");
    }
    return v;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw_data("missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Dataset ingest(const std::string& path, const ColumnMapping& mapping, const Family& family) {
    std::ifstream in(path);
    if (!in) throw_data("cannot open '" + path + "'");
    return ingest_stream(in, path, mapping, family);
}

Dataset ingest_stream(std::istream& in, const std::string& source, const ColumnMapping& mapping,
                      const Family& family) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCategory::data, "empty-file", source + ": no header row");
    const std::vector<std::string> header = split_csv_line(line);

    const bool multinomial = family.id() == "multinomial6";
    const int want_response = family.response_dim();
    if (multinomial) {
        if (mapping.response.size() != 1 && mapping.response.size() != 6)
            throw_usage("multinomial6 takes one category column or six incidence columns");
    } else if (static_cast<int>(mapping.response.size()) != want_response) {
        throw_usage(family.id() + " expects " + std::to_string(want_response) +
                    " response column(s)");
    }
    if (family.needs_covariates() && mapping.covariates.empty())
        throw_usage(family.id() + " needs covariate columns");
    if (!family.needs_covariates() && !mapping.covariates.empty())
        throw_usage(family.id() + " takes no covariate columns");

    std::vector<int> response_idx;
    for (const auto& name : mapping.response) response_idx.push_back(find_column(header, name));
    std::vector<int> covariate_idx;
    for (const auto& name : mapping.covariates) covariate_idx.push_back(find_column(header, name));

    Dataset ds;
    ds.family_id = family.id();
    ds.response_columns = mapping.response;
    ds.covariate_columns = mapping.covariates;
    ds.intercept = family.needs_covariates() && mapping.add_intercept;
    ds.source = source;

    const bool category_column = multinomial && mapping.response.size() == 1;
    int prev_state = -1;
    long row = 1; // header is row 1
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() < header.size())
            throw_data("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
        Observation obs;
        if (category_column) {
            const double c = parse_cell(cells[response_idx[0]], row, mapping.response[0]);
            const long cat = std::lround(c);
            if (cat < 1 || cat > 6 || c != static_cast<double>(cat))
                throw_data("row " + std::to_string(row) + ", column '" + mapping.response[0] +
                           "': category must be an integer in 1..6");
            obs.y.assign(6, 0.0);
            obs.y[cat - 1] = 1.0;
        } else {
            for (size_t k = 0; k < response_idx.size(); ++k)
                obs.y.push_back(parse_cell(cells[response_idx[k]], row, mapping.response[k]));
        }
        if (family.needs_covariates()) {
            if (ds.intercept) obs.x.push_back(1.0);
            for (size_t k = 0; k < covariate_idx.size(); ++k)
                obs.x.push_back(parse_cell(cells[covariate_idx[k]], row, mapping.covariates[k]));
        }
        if (family.is_markov()) {
            obs.prev_state = prev_state;
            prev_state = static_cast<int>(obs.y[0]);
        }
        ds.rows.push_back(std::move(obs));
    }
    if (ds.rows.empty())
        throw Error(ErrorCategory::data, "empty-file", source + ": no data rows");
    if (ds.n() < family.min_sample_size())
        throw_data(source + ": " + std::to_string(ds.n()) + " rows, but " + family.id() +
                   " needs at least " + std::to_string(family.min_sample_size()));
    return ds;
}

void Dataset::write_csv(std::ostream& out) const {
    const bool category_column = family_id == "multinomial6" && response_columns.size() == 1;
    bool first = true;
    for (const auto& c : response_columns) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    for (const auto& c : covariate_columns) out << "," << c;
    out << "\n";
    for (const auto& obs : rows) {
        first = true;
        if (category_column) {
            int cat = 0;
            for (int j = 0; j < 6; ++j)
                if (obs.y[j] == 1.0) cat = j + 1;
            out << cat;
            first = false;
        } else {
            for (double v : obs.y) {
                out << (first ? "" : ",") << format_g17(v);
                first = false;
            }
        }
        // skip the synthetic intercept column
        for (size_t k = intercept ? 1 : 0; k < obs.x.size(); ++k)
            out << "," << format_g17(obs.x[k]);
        out << "\n";
    }
}

} // namespace constancy
