#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "apsafe/data/dataset.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/util/format.hpp"

namespace apsafe::data {

// Windowed dataset cache, CSV. First line `# windows,<n>`, then a header
// `patient_id,first_row,bg_0..bg_11,in_0..in_11,m_0..m_11,y_0..y_5` and one
// row per window. Inputs follow the network's channel-major layout.

inline std::string dataset_csv_header() {
    std::string h = "patient_id,first_row";
    for (const char* ch : {"bg", "in", "m"})
        for (std::size_t t = 0; t < kInputSteps; ++t) h += "," + std::string(ch) + "_" + std::to_string(t);
    for (std::size_t j = 0; j < kOutputSteps; ++j) h += ",y_" + std::to_string(j);
    return h;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
    os << "# windows," << ds.size() << '\n' << dataset_csv_header() << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& p = ds.provenance()[i];
        os << p.patient_id << ',' << p.first_row;
        const auto x = ds[i].flat_inputs();
        for (Eigen::Index k = 0; k < x.size(); ++k) os << ',' << util::format_double(x[k]);
        for (double y : ds[i].targets) os << ',' << util::format_double(y);
        os << '\n';
    }
}

inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(is, line) || line.rfind("# windows,", 0) != 0)
        throw ParseError("dataset cache must start with '# windows,<n>'", line_no, 1);
    const auto expected = static_cast<std::size_t>(util::parse_double(line.substr(10)));
    ++line_no;
    if (!std::getline(is, line) || util::trim(line) != dataset_csv_header())
        throw ParseError("unexpected dataset cache header", line_no, 1);
    Dataset ds;
    while (std::getline(is, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 2 + kInputDim + kOutputSteps)
            throw ParseError("expected " + std::to_string(2 + kInputDim + kOutputSteps) + " fields", line_no, 1);
        Window w;
        try {
            for (std::size_t c = 0; c < kChannels; ++c)
                for (std::size_t t = 0; t < kInputSteps; ++t)
                    w.inputs[t][c] = util::parse_double(cells[2 + input_index(static_cast<Channel>(c), t)]);
            for (std::size_t j = 0; j < kOutputSteps; ++j) w.targets[j] = util::parse_double(cells[2 + kInputDim + j]);
            ds.add(w, {cells[0], static_cast<std::size_t>(std::stoull(cells[1]))});
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no, 1);
        } catch (const std::exception&) {
            throw ParseError("bad first_row value", line_no, 1);
        }
    }
    if (ds.size() != expected)
        throw ParseError("dataset cache declares " + std::to_string(expected) + " windows but holds " +
                         std::to_string(ds.size()), line_no, 1);
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write dataset cache " + path.string());
    write_dataset_csv(os, ds);
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read dataset cache " + path.string());
    return read_dataset_csv(is);
}

}  // namespace apsafe::data
