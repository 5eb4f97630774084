#ifndef CONSTANCY_DATASET_HPP
#define CONSTANCY_DATASET_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "constancy/models.hpp"

namespace constancy {

// Which file columns feed the family's observation schema. Response columns:
// one for the scalar families, two (x, y) for binormal, and for multinomial6
// either one category column with values 1..6 or six incidence columns. Row
// order is time order; there is no timestamp parsing.
struct ColumnMapping {
    std::vector<std::string> response;
    std::vector<std::string> covariates;
    bool add_intercept = true; // regression families: prepend a constant 1
};

struct Dataset {
    std::string family_id;
    std::vector<Observation> rows;
    std::vector<std::string> response_columns;
    std::vector<std::string> covariate_columns;
    bool intercept = false;
    std::string source;

    int n() const { return static_cast<int>(rows.size()); }
    // Writes the same column layout the dataset was ingested from.
    void write_csv(std::ostream& out) const;
};

// Comma-separated text with a header row, UTF-8, '.' decimal separator.
// Malformed cells are reported with row and column coordinates.
Dataset ingest(const std::string& path, const ColumnMapping& mapping, const Family& family);
Dataset ingest_stream(std::istream& in, const std::string& source, const ColumnMapping& mapping,
                      const Family& family);

} // namespace constancy

#endif
